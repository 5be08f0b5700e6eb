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
#include <random>
#include <vector>

#include "liplock/tensor.hpp"

namespace liplock {

// Deterministic random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the distributions are hand-rolled
// (53-bit uniforms, Box-Muller normals using the cosine branch only, no
// cached spare) because std:: distribution algorithms are
// implementation-defined. Identical seeds therefore give identical streams
// on every platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed), seed_(seed) {}

    // Derive an independent child stream; splitmix64 mixing of (seed, id).
    Rng split(uint64_t stream_id) const;

    uint64_t seed() const { return seed_; }

    uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1) with 53 bits of randomness.
    double uniform();
    // Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Integer in [0, n).
    int64_t below(int64_t n);

    // Standard normal via Box-Muller.
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    Tensor gaussian(std::vector<int> shape, double stddev = 1.0);

    // Deterministic in-place Fisher-Yates shuffle of an index vector.
    void shuffle(std::vector<int>& idx);

private:
    std::mt19937_64 eng_;
    uint64_t seed_ = 0;
};

// splitmix64 finalizer; used for seed derivation and stable hashing.
uint64_t mix64(uint64_t x);

} // namespace liplock
