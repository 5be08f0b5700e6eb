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
#include "liplock/rng.hpp"

#include <cmath>

namespace liplock {

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng Rng::split(uint64_t stream_id) const {
    return Rng(mix64(seed_ ^ mix64(stream_id + 0x51ed270b0f3ccd1bULL)));
}

double Rng::uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

int64_t Rng::below(int64_t n) {
    // Modulo bias is < 2^-50 for desk-scale n; acceptable and deterministic.
    return static_cast<int64_t>(eng_() % static_cast<uint64_t>(n));
}

double Rng::normal() {
    // Box-Muller, cosine branch. u1 is kept away from 0 so log is finite.
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Tensor Rng::gaussian(std::vector<int> shape, double stddev) {
    Tensor t(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i)
        t[i] = static_cast<float>(stddev * normal());
    return t;
}

void Rng::shuffle(std::vector<int>& idx) {
    for (size_t i = idx.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(below(static_cast<int64_t>(i)));
        std::swap(idx[i - 1], idx[j]);
    }
}

} // namespace liplock
