/*
 * Copyright 2026 The liplock authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <string>
#include <unordered_map>

#include "liplock/layers.hpp"
#include "liplock/tensor.hpp"

namespace liplock {

// Accumulated parameter gradients keyed by the dotted parameter path used
// by visit_params.
struct GradMap {
    std::unordered_map<std::string, Tensor> g;

    void add(const std::string& path, const Tensor& t);
    const Tensor* find(const std::string& path) const;
    void clear() { g.clear(); }
};

// Reverse pass of one layer: given the input the layer saw and the loss
// gradient at its output, returns the loss gradient at its input and, when
// gm is non-null, accumulates parameter gradients under `path`.
// Intermediate attention quantities are recomputed from x.
Tensor backward_layer(const Layer& l, const Tensor& x, const Tensor& gy,
                      const std::string& path, GradMap* gm);

// Full-network reverse pass from an output cotangent. Returns the input
// gradient; parameter gradients are accumulated into gm when provided.
Tensor net_backward(const Network& net, const Tensor& x, const Tensor& gout, GradMap* gm);

// Vector-Jacobian product wrt the input only.
Tensor net_input_gradient(const Network& net, const Tensor& x, const Tensor& gout);

struct LossGrad {
    double loss = 0.0;
    Tensor grad; // d loss / d logits
};

// Softmax cross-entropy of a logit vector against an integer label,
// computed via a shifted log-sum-exp.
LossGrad cross_entropy(const Tensor& logits, int label);

// Mean squared error against a target tensor of identical shape.
LossGrad mse(const Tensor& pred, const Tensor& target);

} // namespace liplock
