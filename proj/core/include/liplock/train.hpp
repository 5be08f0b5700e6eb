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

#include <cstdint>
#include <vector>

#include "liplock/dataset.hpp"
#include "liplock/layers.hpp"

namespace liplock {

struct TrainConfig {
    int epochs = 10;
    int batch = 64;
    double step = 0.05;
    double momentum = 0.9;
    uint64_t seed = 1;
};

struct TrainReport {
    std::vector<double> epoch_loss; // mean cross-entropy per epoch
    double train_accuracy = 0.0;    // on the training split, final weights
};

// Minibatch SGD with classical momentum on softmax cross-entropy. The
// sample order reshuffles each epoch from the config seed, so a fixed seed
// reproduces the run bit for bit. A non-finite loss aborts with a numeric
// error; nothing is silently clamped.
TrainReport pretrain(Network& net, const Dataset& data, const TrainConfig& cfg);

struct AdaptConfig {
    int epochs = 30;
    int batch = 32;
    double step = 0.01;
    double momentum = 0.9;
    double clip = 5.0; // global gradient-norm ceiling per batch; 0 disables
    uint64_t seed = 2;
};

// Swaps every dot-product attention for the tied euclidean form and
// distills: the original network's logits on the given inputs become MSE
// targets, and only the new attention tensors (wqk, wv, wo) train. wqk
// starts from the old query projection, wo from zero, so the swapped
// network's outputs start exactly where the residual skips left them.
// Returns the adapted network; loss_curve (optional) receives the mean
// distillation loss per epoch.
Network adapt_attention(const Network& src, const std::vector<Tensor>& inputs,
                        const AdaptConfig& cfg, std::vector<double>* loss_curve = nullptr);

} // namespace liplock
