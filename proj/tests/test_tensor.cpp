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

#include <cmath>

#include "liplock/errors.hpp"
#include "liplock/tensor.hpp"

using namespace liplock;

TEST_SUITE("tensor") {

TEST_CASE("construction zero-fills and tracks shape") {
    Tensor t({2, 3});
    CHECK(t.rank() == 2);
    CHECK(t.numel() == 6);
    CHECK(t.dim(0) == 2);
    CHECK(t.dim(1) == 3);
    for (int64_t i = 0; i < t.numel(); ++i) CHECK(t[i] == 0.0f);
    CHECK(t.shape_str() == "(2,3)");
}

TEST_CASE("rank limits and bad dims are rejected") {
    CHECK_THROWS_AS(Tensor(std::vector<int>{}), Error);
    CHECK_THROWS_AS(Tensor({1, 2, 3, 4, 5}), Error);
    CHECK_THROWS_AS(Tensor({0}), Error);
    CHECK_THROWS_AS(Tensor({2, -1}), Error);
    CHECK_THROWS_AS(Tensor({2}, {1.0f, 2.0f, 3.0f}), Error);
}

TEST_CASE("row-major at() addressing") {
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    CHECK(t.at(0, 0) == 0.0f);
    CHECK(t.at(0, 2) == 2.0f);
    CHECK(t.at(1, 0) == 3.0f);
    CHECK(t.at(1, 2) == 5.0f);
    CHECK_THROWS_AS(t.at(0), Error);      // wrong rank
    CHECK_THROWS_AS(t.at(0, 0, 0), Error);

    Tensor u({2, 2, 2}, {0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(u.at(1, 0, 1) == 5.0f);
    CHECK(u.at(1, 1, 1) == 7.0f);
}

TEST_CASE("full and zeros factories") {
    Tensor f = Tensor::full({3}, 2.5f);
    for (int i = 0; i < 3; ++i) CHECK(f.at(i) == 2.5f);
    Tensor z = Tensor::zeros({2, 2});
    CHECK(z.numel() == 4);
    CHECK(z[3] == 0.0f);
}

TEST_CASE("reshaped preserves data order") {
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    Tensor r = t.reshaped({3, 2});
    CHECK(r.at(0, 1) == 1.0f);
    CHECK(r.at(2, 1) == 5.0f);
    CHECK_THROWS_AS(t.reshaped({4, 2}), Error);
}

TEST_CASE("slice_first copies one leading slice") {
    Tensor t({2, 3}, {0, 1, 2, 3, 4, 5});
    Tensor s = slice_first(t, 1);
    CHECK(s.rank() == 1);
    CHECK(s.numel() == 3);
    CHECK(s.at(0) == 3.0f);
    CHECK(s.at(2) == 5.0f);
    CHECK_THROWS_AS(slice_first(t, 2), Error);
    Tensor v({3}, {1, 2, 3});
    CHECK_THROWS_AS(slice_first(v, 0), Error);
}

TEST_CASE("elementwise helpers and shape mismatch") {
    Tensor a({2}, {1, 2});
    Tensor b({2}, {10, 20});
    CHECK(add(a, b).at(1) == 22.0f);
    CHECK(sub(b, a).at(0) == 9.0f);
    CHECK(scale(a, 3.0f).at(1) == 6.0f);
    Tensor c = a;
    add_inplace(c, b);
    CHECK(c.at(0) == 11.0f);
    axpy_inplace(c, 2.0f, a);
    CHECK(c.at(1) == 26.0f);
    Tensor wrong({3}, {0, 0, 0});
    CHECK_THROWS_AS(add(a, wrong), Error);
    CHECK_THROWS_AS(axpy_inplace(c, 1.0f, wrong), Error);
}

TEST_CASE("all_finite flags nan and inf") {
    Tensor t({2}, {1.0f, 2.0f});
    CHECK(t.all_finite());
    t[1] = std::numeric_limits<float>::infinity();
    CHECK_FALSE(t.all_finite());
    t[1] = std::nanf("");
    CHECK_FALSE(t.all_finite());
}

} // TEST_SUITE
