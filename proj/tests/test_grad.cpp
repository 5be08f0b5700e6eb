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

#include "liplock/grad.hpp"
#include "liplock/linalg.hpp"
#include "liplock/rng.hpp"

using namespace liplock;

namespace {

// Scalar probe loss: inner product of the network output with a fixed
// cotangent, so d loss / d output == cot.
double probe_loss(const Network& net, const Tensor& x, const Tensor& cot) {
    return dot(forward(net, x), cot);
}

void check_entry(double analytic, double fd) {
    // float32 parameters limit central differences to ~1e-3 relative.
    const double tol = 4e-3 * std::max({1.0, std::abs(analytic), std::abs(fd)});
    CHECK(std::abs(analytic - fd) <= tol);
}

// Compares net_backward's parameter and input gradients against central
// finite differences, entry by entry.
void gradcheck(Network& net, const Tensor& x, uint64_t cot_seed) {
    Rng r(cot_seed);
    const Tensor out = forward(net, x);
    const Tensor cot = r.gaussian(out.shape());

    GradMap gm;
    const Tensor gin = net_backward(net, x, cot, &gm);

    visit_params(net, [&](const std::string& path, Tensor& t) {
        const Tensor* g = gm.find(path);
        REQUIRE_MESSAGE(g != nullptr, path.c_str());
        for (int64_t i = 0; i < t.numel(); ++i) {
            const float w0 = t[i];
            const float h = 1e-3f * std::max(1.0f, std::abs(w0));
            t[i] = w0 + h;
            const double up = probe_loss(net, x, cot);
            t[i] = w0 - h;
            const double dn = probe_loss(net, x, cot);
            t[i] = w0;
            const double fd = (up - dn) / (double(w0 + h) - double(w0 - h));
            check_entry((*g)[i], fd);
        }
    });

    Tensor xp = x;
    for (int64_t i = 0; i < x.numel(); ++i) {
        const float v0 = xp[i];
        const float h = 1e-3f * std::max(1.0f, std::abs(v0));
        xp[i] = v0 + h;
        const double up = probe_loss(net, xp, cot);
        xp[i] = v0 - h;
        const double dn = probe_loss(net, xp, cot);
        xp[i] = v0;
        const double fd = (up - dn) / (double(v0 + h) - double(v0 - h));
        check_entry(gin[i], fd);
    }

    // input-only path agrees with the full backward
    const Tensor gin2 = net_input_gradient(net, x, cot);
    for (int64_t i = 0; i < gin.numel(); ++i)
        CHECK(gin2[i] == doctest::Approx(gin[i]).epsilon(1e-6));
}

} // namespace

TEST_SUITE("grad") {

TEST_CASE("linear layer gradients, all three input modes") {
    Rng r(0x91);
    Network net;
    net.input_shape = {4};
    Linear l;
    l.W = r.gaussian({3, 4});
    l.b = r.gaussian({3});
    net.layers.push_back(Layer{l});

    gradcheck(net, r.gaussian({4}), 1);       // vector
    gradcheck(net, r.gaussian({2, 4}), 2);    // token rows
    gradcheck(net, r.gaussian({2, 2}), 3);    // flattened
}

TEST_CASE("conv layer gradients with stride and padding") {
    Rng r(0x92);
    Network net;
    net.input_shape = {2, 4, 4};
    Conv2D c;
    c.K = r.gaussian({3, 2, 3, 3});
    c.b = r.gaussian({3});
    c.stride = 2;
    c.pad = 1;
    net.layers.push_back(Layer{c});
    gradcheck(net, r.gaussian({2, 4, 4}), 4);
}

TEST_CASE("activation gradients") {
    Rng r(0x93);
    for (Act a : {Act::relu, Act::gelu, Act::identity}) {
        Network net;
        net.input_shape = {6};
        net.layers.push_back(Layer{Activation{a}});
        gradcheck(net, r.gaussian({6}), 5 + static_cast<uint64_t>(a));
    }
}

TEST_CASE("patch embedding gradients") {
    Rng r(0x94);
    Network net;
    net.input_shape = {1, 4, 4};
    PatchEmbed p;
    p.patch = 2;
    p.W = r.gaussian({3, 4});
    p.b = r.gaussian({3});
    p.pos = r.gaussian({4, 3});
    net.layers.push_back(Layer{p});
    gradcheck(net, r.gaussian({1, 4, 4}), 8);
}

TEST_CASE("l2 attention gradients") {
    Rng r(0x95);
    Network net;
    net.input_shape = {3, 4};
    L2Mha a;
    a.heads = 2;
    a.dim = 4;
    a.seq = 3;
    a.wqk = r.gaussian({2, 2, 4});
    a.wv = r.gaussian({2, 2, 2});
    a.wo = r.gaussian({4, 4});
    net.layers.push_back(Layer{a});
    gradcheck(net, r.gaussian({3, 4}), 9);
}

TEST_CASE("dp attention gradients") {
    Rng r(0x96);
    Network net;
    net.input_shape = {3, 4};
    DpMha a;
    a.heads = 2;
    a.dim = 4;
    a.wq = r.gaussian({2, 2, 4});
    a.wk = r.gaussian({2, 2, 4});
    a.wv = r.gaussian({2, 2, 4});
    a.wo = r.gaussian({4, 4});
    net.layers.push_back(Layer{a});
    gradcheck(net, r.gaussian({3, 4}), 10);
}

TEST_CASE("residual and deep composition gradients") {
    Rng r(0x97);
    Network net;
    net.input_shape = {4};
    Linear l1;
    l1.W = r.gaussian({4, 4});
    l1.b = r.gaussian({4});
    Residual res;
    Linear l2;
    l2.W = r.gaussian({4, 4});
    res.inner.push_back(Layer{l2});
    res.inner.push_back(Layer{Activation{Act::gelu}});
    net.layers.push_back(Layer{l1});
    net.layers.push_back(Layer{res});
    net.layers.push_back(Layer{Activation{Act::relu}});
    gradcheck(net, r.gaussian({4}), 11);
}

TEST_CASE("gradients accumulate across backward calls") {
    Rng r(0x98);
    Network net;
    net.input_shape = {3};
    Linear l;
    l.W = r.gaussian({2, 3});
    net.layers.push_back(Layer{l});
    const Tensor x1 = r.gaussian({3});
    const Tensor x2 = r.gaussian({3});
    const Tensor cot = r.gaussian({2});

    GradMap once;
    net_backward(net, x1, cot, &once);
    net_backward(net, x2, cot, &once);
    GradMap a, b;
    net_backward(net, x1, cot, &a);
    net_backward(net, x2, cot, &b);
    const Tensor* g = once.find("L0.W");
    REQUIRE(g != nullptr);
    for (int64_t i = 0; i < g->numel(); ++i)
        CHECK((*g)[i] ==
              doctest::Approx((*a.find("L0.W"))[i] + (*b.find("L0.W"))[i]).epsilon(1e-6));
}

TEST_CASE("cross entropy value and gradient") {
    Tensor logits({3}, {1.5f, -0.5f, 0.0f});
    const LossGrad lg = cross_entropy(logits, 1);
    // softmax
    double z = std::exp(1.5) + std::exp(-0.5) + std::exp(0.0);
    CHECK(lg.loss == doctest::Approx(-std::log(std::exp(-0.5) / z)).epsilon(1e-6));
    CHECK(lg.grad.at(0) == doctest::Approx(std::exp(1.5) / z).epsilon(1e-6));
    CHECK(lg.grad.at(1) == doctest::Approx(std::exp(-0.5) / z - 1.0).epsilon(1e-6));
    CHECK(lg.grad.at(2) == doctest::Approx(std::exp(0.0) / z).epsilon(1e-6));
    CHECK_THROWS(cross_entropy(logits, 3));
    // huge logits stay finite (log-sum-exp shift)
    Tensor big({2}, {1000.0f, 999.0f});
    CHECK(std::isfinite(cross_entropy(big, 0).loss));
}

TEST_CASE("mse value and gradient") {
    Tensor p({2}, {1.0f, 3.0f});
    Tensor t({2}, {0.0f, 1.0f});
    const LossGrad lg = mse(p, t);
    CHECK(lg.loss == doctest::Approx((1.0 + 4.0) / 2).epsilon(1e-6));
    CHECK(lg.grad.at(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(lg.grad.at(1) == doctest::Approx(2.0).epsilon(1e-6));
    CHECK_THROWS(mse(p, Tensor({3}, {0, 0, 0})));
}

} // TEST_SUITE
