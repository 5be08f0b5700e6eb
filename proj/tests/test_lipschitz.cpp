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
#include <vector>

#include "liplock/errors.hpp"
#include "liplock/layers.hpp"
#include "liplock/linalg.hpp"
#include "liplock/lipschitz.hpp"
#include "liplock/numerics.hpp"
#include "liplock/rng.hpp"
#include "oracles.hpp"

using namespace liplock;

namespace {

Linear rand_linear(int out, int in, uint64_t seed, bool bias = false) {
    Rng r(seed);
    Linear l;
    l.W = r.gaussian({out, in});
    if (bias) l.b = r.gaussian({out});
    return l;
}

// Largest observed difference quotient over seeded input pairs; any valid
// upper bound must dominate it.
double max_quotient(const Network& net, int pairs, uint64_t seed) {
    Rng rng(seed);
    double best = 0.0;
    for (int i = 0; i < pairs; ++i) {
        Rng gen = rng.split(i);
        Tensor a = gen.gaussian(net.input_shape);
        Tensor b = gen.gaussian(net.input_shape);
        const double dx = l2_norm(sub(a, b));
        if (dx == 0.0) continue;
        const double dy = l2_norm(sub(forward(net, a), forward(net, b)));
        best = std::max(best, dy / dx);
    }
    return best;
}

} // namespace

TEST_SUITE("lipschitz") {

TEST_CASE("lambert w0 satisfies w exp(w) = x") {
    CHECK(lambert_w0(0.0) == 0.0);
    CHECK(lambert_w0(M_E) == doctest::Approx(1.0).epsilon(1e-12));
    // Omega constant, reference value from an independent evaluation.
    CHECK(lambert_w0(1.0) == doctest::Approx(0.5671432904097838).epsilon(1e-12));
    for (double x : {1e-6, 0.1, 0.5, 2.0, 17.0, 1000.0}) {
        const double w = lambert_w0(x);
        CHECK(w * std::exp(w) == doctest::Approx(x).epsilon(1e-12));
    }
    CHECK_THROWS_AS(lambert_w0(-0.1), Error);
}

TEST_CASE("sequence factor: unit at one token, frozen values, monotone") {
    CHECK(l2_attention_seq_factor(1) == 1.0);
    // References evaluated independently from the closed form.
    CHECK(l2_attention_seq_factor(2) == doctest::Approx(8.747402327434262).epsilon(1e-12));
    CHECK(l2_attention_seq_factor(4) == doctest::Approx(19.928754443911647).epsilon(1e-12));
    double prev = 0.0;
    for (int n : {1, 2, 3, 5, 8, 16, 64}) {
        const double c = l2_attention_seq_factor(n);
        CHECK(c > prev);
        CHECK(c >= std::sqrt(double(n))); // the kernel mass alone contributes sqrt(N)
        prev = c;
    }
    CHECK_THROWS_AS(l2_attention_seq_factor(0), Error);
}

TEST_CASE("linear bound is the spectral norm") {
    Linear l = rand_linear(5, 3, 0x11, true); // bias shifts, never stretches
    const double b = layer_lipschitz(Layer{l}, {3});
    CHECK(b == doctest::Approx(testing::svd_spectral_norm(l.W)).epsilon(1e-9));
}

TEST_CASE("conv bound is the spectral norm of its matrix form") {
    Conv2D c;
    Rng r(0x22);
    c.stride = 2;
    c.pad = 1;
    c.K = r.gaussian({3, 2, 3, 3});
    c.b = r.gaussian({3});
    const std::vector<int> in{2, 4, 4};
    const double b = layer_lipschitz(Layer{c}, in);
    CHECK(b == doctest::Approx(testing::svd_spectral_norm(conv_matrix(c, in))).epsilon(1e-9));

    // The matrix norm really bounds the map: compare against sampled pairs.
    Network net;
    net.input_shape = in;
    net.layers.push_back(Layer{c});
    CHECK(max_quotient(net, 20, 0x33) <= b * (1.0 + 1e-9));
}

TEST_CASE("activation bounds and the gelu nominal switch") {
    CHECK(layer_lipschitz(Layer{Activation{Act::relu}}, {4}) == 1.0);
    CHECK(layer_lipschitz(Layer{Activation{Act::identity}}, {4}) == 1.0);
    const double g = layer_lipschitz(Layer{Activation{Act::gelu}}, {4});
    CHECK(g == gelu_lipschitz_constant());
    CHECK(g > 1.12); // the computed slope exceeds the rounded constant
    BoundOptions nominal;
    nominal.gelu_nominal = true;
    CHECK(layer_lipschitz(Layer{Activation{Act::gelu}}, {4}, nominal) == 1.12);
}

TEST_CASE("patch embedding bound is the per-block norm") {
    Rng r(0x44);
    PatchEmbed p;
    p.patch = 2;
    p.W = r.gaussian({3, 4});
    p.b = Tensor({3});
    p.pos = Tensor({4, 3});
    const double b = layer_lipschitz(Layer{p}, {1, 4, 4});
    CHECK(b == doctest::Approx(testing::svd_spectral_norm(p.W)).epsilon(1e-9));

    // Blocks act on disjoint patches, so sampled quotients stay below it.
    Network net;
    net.input_shape = {1, 4, 4};
    net.layers.push_back(Layer{p});
    CHECK(max_quotient(net, 20, 0x45) <= b * (1.0 + 1e-9));
}

TEST_CASE("dot-product attention has no finite bound") {
    Rng r(0x55);
    DpMha a;
    a.heads = 1;
    a.dim = 2;
    a.wq = r.gaussian({1, 2, 2});
    a.wk = r.gaussian({1, 2, 2});
    a.wv = r.gaussian({1, 2, 2});
    a.wo = r.gaussian({2, 2});
    try {
        layer_lipschitz(Layer{a}, {3, 2});
        FAIL("bound query on dot-product attention must throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::data);
    }
}

TEST_CASE("l2 attention bound composes head norms and the sequence factor") {
    Rng r(0x66);
    L2Mha a;
    a.heads = 2;
    a.dim = 4;
    a.seq = 3;
    a.wqk = r.gaussian({2, 2, 4});
    a.wv = r.gaussian({2, 2, 2});
    a.wo = r.gaussian({4, 4});

    double sum_sq = 0.0;
    for (int h = 0; h < 2; ++h) {
        const double hq = testing::svd_spectral_norm(slice_first(a.wqk, h));
        const double hv = testing::svd_spectral_norm(slice_first(a.wv, h));
        sum_sq += (hq * hv) * (hq * hv);
    }
    const double wo = testing::svd_spectral_norm(a.wo);

    // Token count from the layer when the input shape is flat...
    const double b3 = layer_lipschitz(Layer{a}, {12});
    CHECK(b3 ==
          doctest::Approx(wo * l2_attention_seq_factor(3) * std::sqrt(sum_sq)).epsilon(1e-9));
    // ...and from the input shape when it carries one.
    const double b5 = layer_lipschitz(Layer{a}, {5, 4});
    CHECK(b5 ==
          doctest::Approx(wo * l2_attention_seq_factor(5) * std::sqrt(sum_sq)).epsilon(1e-9));
    CHECK(b5 > b3);

    // No token count anywhere -> data error.
    L2Mha unsized = a;
    unsized.seq = 0;
    CHECK_THROWS_AS(layer_lipschitz(Layer{unsized}, {12}), Error);
}

TEST_CASE("residual bound is one plus the body product") {
    Linear l = rand_linear(3, 3, 0x77);
    const double nw = testing::svd_spectral_norm(l.W);

    Residual res;
    res.inner.push_back(Layer{l});
    CHECK(layer_lipschitz(Layer{res}, {3}) == doctest::Approx(1.0 + nw).epsilon(1e-9));

    Residual deep;
    deep.inner.push_back(Layer{Activation{Act::relu}});
    deep.inner.push_back(Layer{l});
    CHECK(layer_lipschitz(Layer{deep}, {3}) == doctest::Approx(1.0 + nw).epsilon(1e-9));

    Residual empty; // skip connection twice: x + x
    CHECK(layer_lipschitz(Layer{empty}, {3}) == doctest::Approx(2.0));
}

TEST_CASE("network bound is the per-layer product threaded through shapes") {
    Network e;
    e.input_shape = {3};
    CHECK(network_lipschitz(e) == 1.0);

    Linear a = rand_linear(4, 3, 0x88);
    Linear b = rand_linear(2, 4, 0x89);
    Network net;
    net.input_shape = {3};
    net.layers.push_back(Layer{a});
    net.layers.push_back(Layer{Activation{Act::relu}});
    net.layers.push_back(Layer{b});
    const double expect =
        testing::svd_spectral_norm(a.W) * testing::svd_spectral_norm(b.W);
    CHECK(network_lipschitz(net) == doctest::Approx(expect).epsilon(1e-9));
    // Valid bound: no sampled pair may exceed it.
    CHECK(max_quotient(net, 40, 0x8a) <= network_lipschitz(net) * (1.0 + 1e-9));
}

TEST_CASE("network bound threads conv output shapes into later layers") {
    Rng r(0x99);
    Conv2D c;
    c.stride = 2;
    c.pad = 1;
    c.K = r.gaussian({2, 1, 3, 3});
    c.b = Tensor({2});

    Network net;
    net.input_shape = {1, 4, 4};
    net.layers.push_back(Layer{c});
    net.layers.push_back(Layer{Activation{Act::gelu}});
    net.layers.push_back(Layer{rand_linear(3, 8, 0x9a)}); // 2 * 2 * 2 flattened

    const Linear& l = std::get<Linear>(net.layers[2].v);
    const double expect = testing::svd_spectral_norm(conv_matrix(c, {1, 4, 4})) *
                          gelu_lipschitz_constant() * testing::svd_spectral_norm(l.W);
    CHECK(network_lipschitz(net) == doctest::Approx(expect).epsilon(1e-9));

    BoundOptions nominal;
    nominal.gelu_nominal = true;
    const double expect_nom = expect / gelu_lipschitz_constant() * 1.12;
    CHECK(network_lipschitz(net, nominal) == doctest::Approx(expect_nom).epsilon(1e-9));
}

} // TEST_SUITE
