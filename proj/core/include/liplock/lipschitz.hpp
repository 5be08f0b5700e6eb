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

#include "liplock/layers.hpp"

namespace liplock {

struct BoundOptions {
    // Use the rounded legacy constant 1.12 for the GELU slope instead of
    // the computed maximum (~1.12894). Off by default; the computed value
    // is the sound one.
    bool gelu_nominal = false;
    int power_iters = 500;
    double power_tol = 1e-12;
    uint64_t seed = 0x11b5;
};

// Principal branch of the Lambert W function on [0, inf), by Newton.
double lambert_w0(double x);

// Sequence-length factor of the l2-attention bound. Kernel-weighted
// moments of the squared-distance softmax are maximized in closed form
// (symmetric critical point, Lambert W), giving
//   c(N) = sqrt(N) * (1 + 2k + 2*sqrt(k4)) + 2k,
//   k  = W0((N-1)/e),
//   k2 = s*(s-2) with s = 2 + W0(2(N-1)/e^2),
//   k4 = 8*(k2 + k^2).
// c(1) = 1: a single token reduces the layer to W_O W_V W_QK.
double l2_attention_seq_factor(int n_tokens);

// Lipschitz upper bound of one layer as a map between flattened
// euclidean spaces, for the given input shape. Dot-product attention has
// no finite bound and raises a data error ("unsupported variant").
double layer_lipschitz(const Layer& l, const std::vector<int>& in_shape,
                       const BoundOptions& opts = {});

// Product of per-layer bounds (activations contribute their max slope,
// residual blocks 1 + product of body bounds). Empty network -> 1.
double network_lipschitz(const Network& net, const BoundOptions& opts = {});

} // namespace liplock
