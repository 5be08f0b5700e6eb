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
#include "liplock/numerics.hpp"
#include "liplock/rng.hpp"
#include "oracles.hpp"

using namespace liplock;

TEST_SUITE("numerics") {

TEST_CASE("spectral norm matches exact SVD on random matrices") {
    Rng rng(0x51);
    for (int i = 0; i < 30; ++i) {
        const int r = 1 + int(rng.below(12));
        const int c = 1 + int(rng.below(12));
        Rng gen = rng.split(i);
        const Tensor m = gen.gaussian({r, c});
        const double exact = testing::svd_spectral_norm(m);
        // Defaults can stop early on a narrow spectral gap; ask for full
        // convergence when comparing against the exact value.
        const double est = spectral_norm(m, 20000, 1e-14);
        CHECK(est == doctest::Approx(exact).epsilon(1e-6));
    }
}

TEST_CASE("spectral norm on crafted matrices") {
    // Diagonal: the largest absolute diagonal entry.
    Tensor d({3, 3}, {2, 0, 0, 0, -5, 0, 0, 0, 1});
    CHECK(spectral_norm(d) == doctest::Approx(5.0).epsilon(1e-9));
    // Rank-one u v^T: ||u|| * ||v||.
    Tensor r1({2, 2}, {3 * 1, 3 * 2, 4 * 1, 4 * 2});
    CHECK(spectral_norm(r1) == doctest::Approx(5.0 * std::sqrt(5.0)).epsilon(1e-9));
    // 1x1.
    Tensor s({1, 1}, {-7});
    CHECK(spectral_norm(s) == doctest::Approx(7.0));
}

TEST_CASE("spectral norm is seed-deterministic and rejects bad input") {
    Rng gen(0xabc);
    const Tensor m = gen.gaussian({8, 8});
    CHECK(spectral_norm(m, 200, 1e-10, 1) == spectral_norm(m, 200, 1e-10, 1));
    Tensor bad({2, 2}, {1, 2, 3, 4});
    bad[0] = std::nanf("");
    CHECK_THROWS_AS(spectral_norm(bad), Error);
    CHECK_THROWS_AS(spectral_norm(Tensor({4}, {1, 2, 3, 4})), Error);
}

TEST_CASE("soft threshold shrinks toward zero and composes") {
    CHECK(soft_threshold(3.0, 1.0) == doctest::Approx(2.0));
    CHECK(soft_threshold(-3.0, 1.0) == doctest::Approx(-2.0));
    CHECK(soft_threshold(0.5, 1.0) == 0.0);
    CHECK(soft_threshold(-0.5, 1.0) == 0.0);
    CHECK(soft_threshold(2.0, 0.0) == 2.0);
    CHECK_THROWS_AS(soft_threshold(1.0, -0.1), Error);

    Tensor t({4}, {3.0f, -0.05f, 0.2f, -1.0f});
    const Tensor once = soft_threshold(soft_threshold(t, 0.1), 0.25);
    const Tensor joint = soft_threshold(t, 0.35);
    for (int64_t i = 0; i < t.numel(); ++i)
        CHECK(once[i] == doctest::Approx(joint[i]).epsilon(1e-7));
}

TEST_CASE("gelu and its derivative") {
    CHECK(gelu(0.0) == doctest::Approx(0.0));
    // gelu(x) = x * Phi(x); at large |x| it approaches x or 0.
    CHECK(gelu(6.0) == doctest::Approx(6.0).epsilon(1e-6));
    CHECK(gelu(-6.0) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(gelu_derivative(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    // derivative checks out against finite differences
    for (double x : {-2.0, -0.7, 0.3, 1.0, 1.41, 2.5}) {
        const double h = 1e-6;
        const double fd = (gelu(x + h) - gelu(x - h)) / (2 * h);
        CHECK(gelu_derivative(x) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("gelu max slope sits at sqrt(2) with the known value") {
    const double m = gelu_lipschitz_constant();
    CHECK(m >= 1.128);
    CHECK(m <= 1.130);
    CHECK(std::abs(gelu_lipschitz_argmax() - std::sqrt(2.0)) <= 1e-3);
    // frozen reference: max|gelu'| = 1.1289044... at x = sqrt(2)
    CHECK(m == doctest::Approx(1.1289044).epsilon(1e-5));
}

TEST_CASE("finite difference gradient of a quadratic is exact-ish") {
    Tensor w({2, 2}, {1.0f, -2.0f, 0.5f, 3.0f});
    auto fn = [](const Tensor& t) {
        double s = 0;
        for (int64_t i = 0; i < t.numel(); ++i) s += double(t[i]) * t[i];
        return s;
    };
    const Tensor g = finite_difference_gradient(fn, w, 1e-3);
    for (int64_t i = 0; i < w.numel(); ++i)
        CHECK(g[i] == doctest::Approx(2.0 * w[i]).epsilon(1e-5));
    CHECK_THROWS_AS(finite_difference_gradient(fn, w, 0.0), Error);
}

} // TEST_SUITE
