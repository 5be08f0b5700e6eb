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
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "liplock/rng.hpp"

using namespace liplock;

TEST_SUITE("rng") {

TEST_CASE("fixed seed reproduces the stream exactly") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(43);
    bool all_equal = true;
    Rng a2(42);
    for (int i = 0; i < 16; ++i) all_equal &= a2.next_u64() == c.next_u64();
    CHECK_FALSE(all_equal);
}

TEST_CASE("split streams are independent of parent consumption") {
    Rng parent(7);
    const uint64_t s1 = parent.split(3).seed();
    parent.next_u64();
    parent.next_u64();
    CHECK(parent.split(3).seed() == s1); // split is const, order-free
    CHECK(parent.split(4).seed() != s1);
}

TEST_CASE("uniform stays in range and covers it") {
    Rng r(1);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 2000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.05);
    CHECK(hi > 0.95);
    for (int i = 0; i < 200; ++i) {
        const double u = r.uniform(-2.0, 5.0);
        CHECK(u >= -2.0);
        CHECK(u < 5.0);
    }
}

TEST_CASE("below covers 0..n-1") {
    Rng r(2);
    std::set<int64_t> seen;
    for (int i = 0; i < 400; ++i) {
        const int64_t v = r.below(7);
        CHECK(v >= 0);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
}

TEST_CASE("normal has roughly standard moments") {
    Rng r(3);
    const int n = 20000;
    double sum = 0, sq = 0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.03);
    CHECK(std::abs(var - 1.0) < 0.05);
    for (int i = 0; i < 100; ++i) {
        const double x = r.normal(10.0, 0.0);
        CHECK(x == 10.0);
    }
}

TEST_CASE("gaussian tensor is seeded and scaled") {
    Rng a(5), b(5);
    Tensor t1 = a.gaussian({3, 4}, 2.0);
    Tensor t2 = b.gaussian({3, 4}, 2.0);
    CHECK(t1.shape() == std::vector<int>{3, 4});
    for (int64_t i = 0; i < t1.numel(); ++i) CHECK(t1[i] == t2[i]);
}

TEST_CASE("shuffle permutes deterministically") {
    std::vector<int> v(20);
    for (int i = 0; i < 20; ++i) v[i] = i;
    std::vector<int> w = v;
    Rng a(9), b(9);
    a.shuffle(v);
    b.shuffle(w);
    CHECK(v == w);
    std::vector<int> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i); // still a permutation
    CHECK(v != sorted); // 20 elements: identity shuffle is (1/20!)-unlikely
}

TEST_CASE("mix64 spreads nearby inputs") {
    CHECK(mix64(1) != mix64(2));
    CHECK(mix64(0) != 0);
    // avalanche: flipping one input bit flips many output bits
    const uint64_t d = mix64(100) ^ mix64(101);
    int bits = 0;
    for (int i = 0; i < 64; ++i) bits += int((d >> i) & 1);
    CHECK(bits > 10);
}

} // TEST_SUITE
