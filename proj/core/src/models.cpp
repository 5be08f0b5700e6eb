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
#include "liplock/models.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "liplock/errors.hpp"
#include "liplock/rng.hpp"

namespace liplock {

namespace {

int numel_of(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), 1, std::multiplies<int>());
}

// One split per tensor keeps the draw independent of construction order.
Tensor init_gauss(Rng& root, uint64_t slot, const std::vector<int>& shape, double std) {
    Rng r = root.split(slot);
    return r.gaussian(shape, std);
}

Tensor zeros(const std::vector<int>& shape) { return Tensor(shape); }

} // namespace

Network build_mlp(const std::vector<int>& input_shape, int classes,
                  const std::vector<int>& hidden, uint64_t seed) {
    if (classes < 2) throw usage_error("build_mlp: need classes >= 2");
    for (int h : hidden)
        if (h < 1) throw usage_error("build_mlp: hidden widths must be positive");
    Network net;
    net.input_shape = input_shape;
    net.classes = classes;
    net.seed = seed;
    Rng root(seed);
    uint64_t slot = 0;
    int in = numel_of(input_shape);
    std::ostringstream name;
    name << "mlp";
    for (size_t i = 0; i < hidden.size(); ++i) {
        const int h = hidden[i];
        // He scaling: the layer feeds a relu.
        Linear l{init_gauss(root, slot++, {h, in}, std::sqrt(2.0 / in)), zeros({h})};
        net.layers.push_back(Layer{std::move(l)});
        net.layers.push_back(Layer{Activation{Act::relu}});
        name << (i == 0 ? "-" : "x") << h;
        in = h;
    }
    Linear head{init_gauss(root, slot++, {classes, in}, std::sqrt(1.0 / in)),
                zeros({classes})};
    net.layers.push_back(Layer{std::move(head)});
    net.name = name.str();
    net.provenance = "init";
    return net;
}

Network build_conv(const std::vector<int>& input_shape, int classes, uint64_t seed) {
    if (input_shape.size() != 3)
        throw usage_error("build_conv: input shape must be (channels, h, w)");
    if (classes < 2) throw usage_error("build_conv: need classes >= 2");
    Network net;
    net.input_shape = input_shape;
    net.classes = classes;
    net.seed = seed;
    net.name = "conv8x16";
    net.provenance = "init";
    Rng root(seed);
    uint64_t slot = 0;

    std::vector<int> shape = input_shape;
    const int stages[2] = {8, 16};
    for (int oc : stages) {
        const int ic = shape[0];
        const int fan = ic * 3 * 3;
        Conv2D c{init_gauss(root, slot++, {oc, ic, 3, 3}, std::sqrt(2.0 / fan)),
                 zeros({oc}), 2, 1};
        shape = conv_output_shape(c, shape);
        net.layers.push_back(Layer{std::move(c)});
        net.layers.push_back(Layer{Activation{Act::relu}});
    }
    int in = numel_of(shape);
    Linear mid{init_gauss(root, slot++, {64, in}, std::sqrt(2.0 / in)), zeros({64})};
    net.layers.push_back(Layer{std::move(mid)});
    net.layers.push_back(Layer{Activation{Act::relu}});
    Linear head{init_gauss(root, slot++, {classes, 64}, std::sqrt(1.0 / 64)),
                zeros({classes})};
    net.layers.push_back(Layer{std::move(head)});
    return net;
}

Network build_vit(const std::vector<int>& input_shape, int classes,
                  const ModelSpec& spec, bool dot_product, uint64_t seed) {
    if (input_shape.size() != 3 && input_shape.size() != 1)
        throw usage_error("build_vit: input shape must be rank 1 or 3");
    if (classes < 2) throw usage_error("build_vit: need classes >= 2");
    if (spec.patch < 1 || spec.depth < 1 || spec.embed < 1 || spec.heads < 1 ||
        spec.mlp_ratio < 1)
        throw usage_error("build_vit: patch, depth, embed, heads, mlp_ratio must be positive");
    if (spec.embed % spec.heads != 0)
        throw usage_error("build_vit: embed must be divisible by heads");

    int tokens, pvol;
    if (input_shape.size() == 3) {
        const int c = input_shape[0], h = input_shape[1], w = input_shape[2];
        if (h % spec.patch != 0 || w % spec.patch != 0)
            throw usage_error("build_vit: image sides must be divisible by patch");
        tokens = (h / spec.patch) * (w / spec.patch);
        pvol = c * spec.patch * spec.patch;
    } else {
        if (input_shape[0] % spec.patch != 0)
            throw usage_error("build_vit: input length must be divisible by patch");
        tokens = input_shape[0] / spec.patch;
        pvol = spec.patch;
    }

    Network net;
    net.input_shape = input_shape;
    net.classes = classes;
    net.seed = seed;
    net.provenance = "init";
    std::ostringstream name;
    name << (dot_product ? "vitdp" : "vit") << "-p" << spec.patch << "d" << spec.depth
         << "e" << spec.embed << "h" << spec.heads;
    net.name = name.str();

    Rng root(seed);
    uint64_t slot = 0;
    const int D = spec.embed;
    const int d = D / spec.heads;
    const int H = spec.heads;

    PatchEmbed pe;
    pe.W = init_gauss(root, slot++, {D, pvol}, std::sqrt(1.0 / pvol));
    pe.b = zeros({D});
    pe.pos = init_gauss(root, slot++, {tokens, D}, 0.02);
    pe.patch = spec.patch;
    net.layers.push_back(Layer{std::move(pe)});

    for (int blk = 0; blk < spec.depth; ++blk) {
        Residual attn_block;
        if (dot_product) {
            DpMha a;
            a.wq = init_gauss(root, slot++, {H, d, D}, std::sqrt(1.0 / D));
            a.wk = init_gauss(root, slot++, {H, d, D}, std::sqrt(1.0 / D));
            a.wv = init_gauss(root, slot++, {H, d, D}, std::sqrt(1.0 / D));
            a.wo = init_gauss(root, slot++, {D, D}, 0.5 * std::sqrt(1.0 / D));
            a.heads = H;
            a.dim = D;
            attn_block.inner.push_back(Layer{std::move(a)});
        } else {
            L2Mha a;
            a.wqk = init_gauss(root, slot++, {H, d, D}, std::sqrt(1.0 / D));
            a.wv = init_gauss(root, slot++, {H, d, d}, std::sqrt(1.0 / d));
            a.wo = init_gauss(root, slot++, {D, D}, 0.5 * std::sqrt(1.0 / D));
            a.heads = H;
            a.dim = D;
            a.seq = tokens;
            attn_block.inner.push_back(Layer{std::move(a)});
        }
        net.layers.push_back(Layer{Residual{std::move(attn_block.inner)}});

        const int hid = spec.mlp_ratio * D;
        Residual ff;
        ff.inner.push_back(Layer{Linear{
            init_gauss(root, slot++, {hid, D}, std::sqrt(1.0 / D)), zeros({hid})}});
        ff.inner.push_back(Layer{Activation{Act::gelu}});
        ff.inner.push_back(Layer{Linear{
            init_gauss(root, slot++, {D, hid}, 0.5 * std::sqrt(1.0 / hid)), zeros({D})}});
        net.layers.push_back(Layer{std::move(ff)});
    }

    const int flat = tokens * D;
    Linear head{init_gauss(root, slot++, {classes, flat}, std::sqrt(1.0 / flat)),
                zeros({classes})};
    net.layers.push_back(Layer{std::move(head)});
    return net;
}

Network build_model(const ModelSpec& spec, const std::vector<int>& input_shape,
                    int classes, uint64_t seed) {
    if (spec.kind == "mlp") return build_mlp(input_shape, classes, spec.hidden, seed);
    if (spec.kind == "conv") return build_conv(input_shape, classes, seed);
    if (spec.kind == "vit") return build_vit(input_shape, classes, spec, false, seed);
    if (spec.kind == "vit_dp") return build_vit(input_shape, classes, spec, true, seed);
    throw usage_error("unknown model kind: " + spec.kind);
}

} // namespace liplock
