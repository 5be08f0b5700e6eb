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
#include <string>
#include <vector>

#include "liplock/layers.hpp"

namespace liplock {

// What to build; parsed straight from the [model] config section.
struct ModelSpec {
    std::string kind = "mlp";     // mlp | conv | vit | vit_dp
    std::vector<int> hidden = {256, 128}; // mlp widths
    int patch = 7;                // vit patch edge
    int depth = 2;                // vit block count
    int embed = 64;               // vit embedding width (divisible by heads)
    int heads = 4;                // vit attention heads
    int mlp_ratio = 2;            // vit feed-forward expansion
};

// Seeded builders. The same seed always yields bit-identical parameters.
// Weights draw from centered gaussians scaled by 1/sqrt(fan_in) (2/fan_in
// before relu); biases start at zero.
Network build_mlp(const std::vector<int>& input_shape, int classes,
                  const std::vector<int>& hidden, uint64_t seed);
// Two strided 3x3 conv stages, each halving the spatial extent, then a
// small fully connected head.
Network build_conv(const std::vector<int>& input_shape, int classes, uint64_t seed);
// Patch embedding with a learned position table, depth x (attention block,
// gelu feed-forward block) with residual skips, flattening linear head.
// dot_product selects the unbounded baseline attention.
Network build_vit(const std::vector<int>& input_shape, int classes,
                  const ModelSpec& spec, bool dot_product, uint64_t seed);

Network build_model(const ModelSpec& spec, const std::vector<int>& input_shape,
                    int classes, uint64_t seed);

} // namespace liplock
