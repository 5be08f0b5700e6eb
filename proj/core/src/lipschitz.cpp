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
#include "liplock/lipschitz.hpp"

#include <cmath>

#include "liplock/errors.hpp"
#include "liplock/numerics.hpp"

namespace liplock {

double lambert_w0(double x) {
    if (x < 0.0) throw usage_error("lambert_w0: negative argument");
    if (x == 0.0) return 0.0;
    double w = std::log1p(x); // decent start on [0, inf)
    for (int i = 0; i < 64; ++i) {
        double ew = std::exp(w);
        double f = w * ew - x;
        double step = f / (ew * (w + 1.0) - f * (w + 2.0) / (2.0 * w + 2.0)); // Halley
        w -= step;
        if (std::fabs(step) <= 1e-15 * std::max(1.0, std::fabs(w))) break;
    }
    return w;
}

double l2_attention_seq_factor(int n_tokens) {
    if (n_tokens <= 0) throw data_error("l2 attention bound: token count must be positive");
    double a = static_cast<double>(n_tokens - 1);
    double k = lambert_w0(a / M_E);
    double s = 2.0 + lambert_w0(2.0 * a / (M_E * M_E));
    double k2 = s * (s - 2.0);
    double k4 = 8.0 * (k2 + k * k);
    return std::sqrt(static_cast<double>(n_tokens)) * (1.0 + 2.0 * k + 2.0 * std::sqrt(k4)) +
           2.0 * k;
}

namespace {

double sn(const Tensor& m, const BoundOptions& o) {
    return spectral_norm(m, o.power_iters, o.power_tol, o.seed);
}

double l2mha_bound(const L2Mha& a, int n_tokens, const BoundOptions& o) {
    double sum_sq = 0.0;
    for (int h = 0; h < a.heads; ++h) {
        double hq = sn(slice_first(a.wqk, h), o);
        double hv = sn(slice_first(a.wv, h), o);
        sum_sq += (hq * hv) * (hq * hv);
    }
    return sn(a.wo, o) * l2_attention_seq_factor(n_tokens) * std::sqrt(sum_sq);
}

} // namespace

double layer_lipschitz(const Layer& l, const std::vector<int>& in_shape,
                       const BoundOptions& opts) {
    if (const auto* lin = std::get_if<Linear>(&l.v)) return sn(lin->W, opts);
    if (const auto* cv = std::get_if<Conv2D>(&l.v)) return sn(conv_matrix(*cv, in_shape), opts);
    if (const auto* ac = std::get_if<Activation>(&l.v)) {
        switch (ac->kind) {
            case Act::relu:
            case Act::identity:
                return 1.0;
            case Act::gelu:
                return opts.gelu_nominal ? 1.12 : gelu_lipschitz_constant();
        }
    }
    if (const auto* at = std::get_if<L2Mha>(&l.v)) {
        int n = in_shape.size() == 2 ? in_shape[0] : at->seq;
        if (n <= 0) throw data_error("l2 attention bound: unknown token count");
        return l2mha_bound(*at, n, opts);
    }
    if (std::get_if<DpMha>(&l.v))
        throw data_error("unsupported variant: dot-product attention has no finite bound");
    if (const auto* pe = std::get_if<PatchEmbed>(&l.v)) {
        // Non-overlapping patches partition the input, so the embedding is
        // block-diagonal with identical blocks: its norm is the block's.
        (void)pe;
        return sn(pe->W, opts);
    }
    const auto* rs = std::get_if<Residual>(&l.v);
    double prod = 1.0;
    std::vector<int> s = in_shape;
    for (const auto& il : rs->inner) {
        prod *= layer_lipschitz(il, s, opts);
        s = shape_after(il, s);
    }
    return 1.0 + prod;
}

double network_lipschitz(const Network& net, const BoundOptions& opts) {
    double prod = 1.0;
    std::vector<int> s = net.input_shape;
    for (const auto& l : net.layers) {
        prod *= layer_lipschitz(l, s, opts);
        s = shape_after(l, s);
    }
    return prod;
}

} // namespace liplock
