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

#include <string>
#include <vector>

#include "liplock/errors.hpp"
#include "liplock/layers.hpp"
#include "liplock/lipschitz.hpp"
#include "liplock/models.hpp"
#include "liplock/rng.hpp"

using namespace liplock;

namespace {

bool params_identical(const Network& a, const Network& b) {
    if (param_count(a) != param_count(b)) return false;
    bool same = true;
    std::vector<std::pair<std::string, const Tensor*>> pa;
    visit_params(a, [&](const std::string& p, const Tensor& t) { pa.emplace_back(p, &t); });
    size_t i = 0;
    visit_params(b, [&](const std::string& p, const Tensor& t) {
        if (i >= pa.size() || pa[i].first != p || pa[i].second->shape() != t.shape()) {
            same = false;
        } else {
            for (int64_t k = 0; k < t.numel(); ++k)
                if ((*pa[i].second)[k] != t[k]) same = false;
        }
        ++i;
    });
    return same && i == pa.size();
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("mlp builder: shapes, zero biases, run-through") {
    const Network net = build_mlp({6}, 3, {8, 5}, 0x100);
    CHECK(net.input_shape == std::vector<int>{6});
    CHECK(net.classes == 3);
    CHECK(net.provenance == "init");
    CHECK(net.name == "mlp-8x5");
    REQUIRE(net.layers.size() == 5); // linear relu linear relu linear

    const auto& l0 = std::get<Linear>(net.layers[0].v);
    CHECK(l0.W.shape() == std::vector<int>{8, 6});
    bool zeros = true;
    for (int64_t i = 0; i < l0.b.numel(); ++i) zeros = zeros && l0.b[i] == 0.0f;
    CHECK(zeros);
    CHECK(std::get<Activation>(net.layers[1].v).kind == Act::relu);
    const auto& head = std::get<Linear>(net.layers[4].v);
    CHECK(head.W.shape() == std::vector<int>{3, 5});

    Rng rng(1);
    CHECK(forward(net, rng.gaussian({6})).shape() == std::vector<int>{3});
    CHECK(output_shape(net) == std::vector<int>{3});
}

TEST_CASE("conv builder produces a runnable image classifier") {
    const Network net = build_conv({1, 28, 28}, 10, 0x200);
    CHECK(net.name == "conv8x16");
    Rng rng(2);
    const Tensor y = forward(net, rng.gaussian({1, 28, 28}));
    CHECK(y.shape() == std::vector<int>{10});
    CHECK(network_lipschitz(net) > 0.0);
}

TEST_CASE("vit builder: block structure and both attention kinds") {
    ModelSpec spec;
    spec.kind = "vit";
    spec.patch = 7;
    spec.depth = 2;
    spec.embed = 8;
    spec.heads = 2;
    spec.mlp_ratio = 2;

    const Network vit = build_vit({1, 28, 28}, 10, spec, false, 0x300);
    CHECK(vit.name == "vit-p7d2e8h2");
    REQUIRE(vit.layers.size() >= size_t(1 + 2 * 2 + 1));
    CHECK(std::get_if<PatchEmbed>(&vit.layers[0].v) != nullptr);
    const auto* blk = std::get_if<Residual>(&vit.layers[1].v);
    REQUIRE(blk != nullptr);
    CHECK(std::get_if<L2Mha>(&blk->inner[0].v) != nullptr);

    Rng rng(3);
    CHECK(forward(vit, rng.gaussian({1, 28, 28})).shape() == std::vector<int>{10});
    CHECK(network_lipschitz(vit) > 0.0); // bounded end to end

    const Network dp = build_vit({1, 28, 28}, 10, spec, true, 0x300);
    CHECK(dp.name == "vitdp-p7d2e8h2");
    const auto* dblk = std::get_if<Residual>(&dp.layers[1].v);
    REQUIRE(dblk != nullptr);
    CHECK(std::get_if<DpMha>(&dblk->inner[0].v) != nullptr);
    CHECK(forward(dp, rng.gaussian({1, 28, 28})).shape() == std::vector<int>{10});
    CHECK_THROWS_AS(network_lipschitz(dp), Error);
}

TEST_CASE("builders are deterministic in the seed") {
    CHECK(params_identical(build_mlp({4}, 2, {6}, 9), build_mlp({4}, 2, {6}, 9)));
    CHECK_FALSE(params_identical(build_mlp({4}, 2, {6}, 9), build_mlp({4}, 2, {6}, 10)));

    ModelSpec spec;
    spec.patch = 4;
    spec.depth = 1;
    spec.embed = 4;
    spec.heads = 2;
    CHECK(params_identical(build_vit({1, 8, 8}, 4, spec, false, 5),
                           build_vit({1, 8, 8}, 4, spec, false, 5)));
}

TEST_CASE("dispatch by kind and input validation") {
    ModelSpec spec;
    spec.kind = "mlp";
    spec.hidden = {6};
    const Network m = build_model(spec, {4}, 2, 1);
    CHECK(m.name == "mlp-6");

    spec.kind = "conv";
    CHECK(build_model(spec, {1, 16, 16}, 4, 1).name == "conv8x16");

    spec.kind = "vit";
    spec.patch = 4;
    spec.embed = 4;
    spec.heads = 2;
    spec.depth = 1;
    CHECK(build_model(spec, {1, 8, 8}, 4, 1).name == "vit-p4d1e4h2");
    spec.kind = "vit_dp";
    CHECK(build_model(spec, {1, 8, 8}, 4, 1).name == "vitdp-p4d1e4h2");

    spec.kind = "resnet";
    CHECK_THROWS_AS(build_model(spec, {1, 8, 8}, 4, 1), Error);

    // Patch must divide the image edge, heads must divide the embedding.
    ModelSpec bad;
    bad.kind = "vit";
    bad.patch = 5;
    bad.embed = 8;
    bad.heads = 2;
    CHECK_THROWS_AS(build_model(bad, {1, 28, 28}, 10, 1), Error);
    bad.patch = 7;
    bad.heads = 3;
    CHECK_THROWS_AS(build_model(bad, {1, 28, 28}, 10, 1), Error);
}

} // TEST_SUITE
