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

#include "liplock/tensor.hpp"

namespace liplock {

struct Dataset {
    std::vector<Tensor> inputs;
    std::vector<int> labels;
    int classes = 0;
    std::string name;

    int size() const { return static_cast<int>(inputs.size()); }
};

// Gaussian clusters at fixed centers spread * e_{k mod dim} with alternating
// sign on wraparound, radius 3. Noise vectors are clipped to norm 3*spread,
// so every point stays within a deterministic ball of its center and
// separability statements hold with certainty, not just with probability.
// Labels cycle 0..classes-1, so any contiguous split stays balanced.
Dataset synth_blobs(uint64_t seed, int n, int classes, int dim, double spread);

// Procedural digit images: a 5x7 glyph per class rendered at 3x scale into
// a 28x28 canvas (rank-3, 1x28x28, values in [0,1]) with per-sample
// position jitter, intensity scaling and clipped pixel noise. Labels cycle
// 0..9. A stand-in for handwritten-digit data with the same shape and the
// same loader path.
Dataset synth_digits(uint64_t seed, int n);

// IDX round-trip: big-endian magic 0x00000803 (images, u8 pixels) and
// 0x00000801 (labels, u8). Pixels map linearly between [0,1] and 0..255.
void write_idx(const Dataset& d, const std::string& images_path,
               const std::string& labels_path);
// Distinct failures: "bad magic", "truncated", "count mismatch".
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// Head/tail split; generation orders above cycle labels, so both halves
// stay balanced.
void split_dataset(const Dataset& d, double test_fraction, Dataset& train, Dataset& test);

} // namespace liplock
