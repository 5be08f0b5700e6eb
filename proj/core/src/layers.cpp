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
#include "liplock/layers.hpp"

#include <cmath>

#include "liplock/errors.hpp"
#include "liplock/linalg.hpp"
#include "liplock/numerics.hpp"

namespace liplock {

std::string act_name(Act a) {
    switch (a) {
        case Act::relu: return "relu";
        case Act::gelu: return "gelu";
        case Act::identity: return "identity";
    }
    return "?";
}

Act act_from_name(const std::string& s) {
    if (s == "relu") return Act::relu;
    if (s == "gelu") return Act::gelu;
    if (s == "identity") return Act::identity;
    throw data_error("unknown activation '" + s + "'");
}

namespace {

[[noreturn]] void shape_fail(const std::string& path, const std::string& what) {
    throw data_error("layer " + path + ": " + what);
}

Tensor add_bias(Tensor y, const Tensor& b) {
    if (b.empty()) return y;
    if (y.rank() == 1) {
        for (int i = 0; i < y.dim(0); ++i) y[i] += b[i];
    } else {
        for (int t = 0; t < y.dim(0); ++t)
            for (int j = 0; j < y.dim(1); ++j) y.at(t, j) += b[j];
    }
    return y;
}

Tensor linear_forward(const Linear& l, const Tensor& x, const std::string& path) {
    int out = l.W.dim(0), in = l.W.dim(1);
    if (!l.b.empty() && l.b.dim(0) != out) shape_fail(path, "bias size mismatch");
    if (x.rank() == 1 && x.dim(0) == in) return add_bias(matvec(l.W, x), l.b);
    if (x.rank() == 2 && x.dim(1) == in) return add_bias(map_rows(l.W, x), l.b);
    if (x.numel() == in) {
        Tensor flat = x.reshaped({static_cast<int>(x.numel())});
        return add_bias(matvec(l.W, flat), l.b);
    }
    shape_fail(path, "linear expects width " + std::to_string(in) + ", got " + x.shape_str());
}

Tensor act_forward(const Activation& a, const Tensor& x) {
    Tensor y = x;
    switch (a.kind) {
        case Act::relu:
            for (int64_t i = 0; i < y.numel(); ++i)
                if (y[i] < 0.0f) y[i] = 0.0f;
            break;
        case Act::gelu:
            for (int64_t i = 0; i < y.numel(); ++i)
                y[i] = static_cast<float>(gelu(static_cast<double>(y[i])));
            break;
        case Act::identity:
            break;
    }
    return y;
}

Tensor conv_forward(const Conv2D& c, const Tensor& x, const std::string& path) {
    if (x.rank() != 3) shape_fail(path, "conv expects rank-3 input, got " + x.shape_str());
    auto os = conv_output_shape(c, x.shape());
    int oc = os[0], oh = os[1], ow = os[2];
    int ic = c.K.dim(1), kh = c.K.dim(2), kw = c.K.dim(3);
    if (x.dim(0) != ic) shape_fail(path, "conv channel mismatch");
    int h = x.dim(1), w = x.dim(2);
    Tensor y({oc, oh, ow});
    for (int o = 0; o < oc; ++o)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double acc = c.b.empty() ? 0.0 : static_cast<double>(c.b[o]);
                for (int i = 0; i < ic; ++i)
                    for (int ky = 0; ky < kh; ++ky) {
                        int iy = oy * c.stride + ky - c.pad;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            int ix = ox * c.stride + kx - c.pad;
                            if (ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(c.K.at(o, i, ky, kx)) * x.at(i, iy, ix);
                        }
                    }
                y.at(o, oy, ox) = static_cast<float>(acc);
            }
    return y;
}

Tensor patch_forward(const PatchEmbed& p, const Tensor& x, const std::string& path) {
    int tokens = patch_tokens(p, x.shape(), path);
    int embed = p.W.dim(0);
    int pvol = p.W.dim(1);
    if (p.pos.rank() != 2 || p.pos.dim(0) != tokens || p.pos.dim(1) != embed)
        shape_fail(path, "position table shape mismatch");
    Tensor out({tokens, embed});
    for (int t = 0; t < tokens; ++t) {
        Tensor col = patch_column(p, x, t);
        if (col.dim(0) != pvol) shape_fail(path, "patch volume mismatch");
        Tensor y = matvec(p.W, col);
        for (int j = 0; j < embed; ++j) {
            float v = y[j] + p.pos.at(t, j);
            if (!p.b.empty()) v += p.b[j];
            out.at(t, j) = v;
        }
    }
    return out;
}

} // namespace

int patch_tokens(const PatchEmbed& p, const std::vector<int>& in, const std::string& path) {
    if (p.patch <= 0) shape_fail(path, "patch size must be positive");
    if (in.size() == 3) {
        if (in[1] % p.patch != 0 || in[2] % p.patch != 0)
            shape_fail(path, "input height/width not divisible by patch size");
        return (in[1] / p.patch) * (in[2] / p.patch);
    }
    if (in.size() == 1) {
        if (in[0] % p.patch != 0) shape_fail(path, "input length not divisible by patch size");
        return in[0] / p.patch;
    }
    shape_fail(path, "patch embedding expects rank-1 or rank-3 input");
}

Tensor patch_column(const PatchEmbed& p, const Tensor& x, int t) {
    if (x.rank() == 1) {
        Tensor v({p.patch});
        for (int i = 0; i < p.patch; ++i) v[i] = x[t * p.patch + i];
        return v;
    }
    int c = x.dim(0), w = x.dim(2);
    int gw = w / p.patch;
    int ty = t / gw, tx = t % gw;
    Tensor v({c * p.patch * p.patch});
    int k = 0;
    for (int ch = 0; ch < c; ++ch)
        for (int py = 0; py < p.patch; ++py)
            for (int px = 0; px < p.patch; ++px)
                v[k++] = x.at(ch, ty * p.patch + py, tx * p.patch + px);
    return v;
}

Tensor softmax_rows(const Tensor& s) {
    if (s.rank() != 2) throw data_error("softmax_rows: expected a matrix");
    Tensor p = s;
    int n = s.dim(0), m = s.dim(1);
    for (int i = 0; i < n; ++i) {
        double mx = -1e300;
        for (int j = 0; j < m; ++j) mx = std::max(mx, static_cast<double>(p.at(i, j)));
        double z = 0.0;
        for (int j = 0; j < m; ++j) z += std::exp(static_cast<double>(p.at(i, j)) - mx);
        for (int j = 0; j < m; ++j)
            p.at(i, j) = static_cast<float>(std::exp(static_cast<double>(p.at(i, j)) - mx) / z);
    }
    return p;
}

Tensor l2_attention_forward(const L2Mha& a, const Tensor& x) {
    if (x.rank() != 2 || x.dim(1) != a.dim)
        throw data_error("l2 attention expects (tokens, " + std::to_string(a.dim) + "), got " + x.shape_str());
    if (a.dim % a.heads != 0) throw data_error("l2 attention: dim not divisible by heads");
    const int n = x.dim(0), d = a.dim / a.heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    Tensor concat({n, a.dim});
    for (int h = 0; h < a.heads; ++h) {
        Tensor y = map_rows(slice_first(a.wqk, h), x); // (n, d) projected tokens
        // s_ij = -|y_i - y_j|^2 / sqrt(d); diagonal is exactly zero.
        Tensor s({n, n});
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double acc = 0.0;
                for (int k = 0; k < d; ++k) {
                    double diff = static_cast<double>(y.at(i, k)) - y.at(j, k);
                    acc += diff * diff;
                }
                s.at(i, j) = static_cast<float>(-acc * inv_sqrt_d);
            }
        Tensor p = softmax_rows(s);
        Tensor v = map_rows(slice_first(a.wv, h), y); // values from projected tokens
        Tensor o = matmul(p, v);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < d; ++k) concat.at(i, h * d + k) = o.at(i, k);
    }
    return map_rows(a.wo, concat);
}

Tensor dp_attention_forward(const DpMha& a, const Tensor& x) {
    if (x.rank() != 2 || x.dim(1) != a.dim)
        throw data_error("dp attention expects (tokens, " + std::to_string(a.dim) + "), got " + x.shape_str());
    if (a.dim % a.heads != 0) throw data_error("dp attention: dim not divisible by heads");
    const int n = x.dim(0), d = a.dim / a.heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    Tensor concat({n, a.dim});
    for (int h = 0; h < a.heads; ++h) {
        Tensor q = map_rows(slice_first(a.wq, h), x);
        Tensor k = map_rows(slice_first(a.wk, h), x);
        Tensor v = map_rows(slice_first(a.wv, h), x);
        Tensor s = matmul(q, transpose(k));
        for (int64_t i = 0; i < s.numel(); ++i)
            s[i] = static_cast<float>(static_cast<double>(s[i]) * inv_sqrt_d);
        Tensor p = softmax_rows(s);
        Tensor o = matmul(p, v);
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < d; ++c) concat.at(i, h * d + c) = o.at(i, c);
    }
    return map_rows(a.wo, concat);
}

Tensor forward_layer(const Layer& l, const Tensor& x, const std::string& path, Tape* tape) {
    size_t slot = 0;
    if (tape) {
        slot = tape->size();
        tape->push_back(TapeEntry{path, &l, x, Tensor()});
    }
    Tensor out;
    if (const auto* lin = std::get_if<Linear>(&l.v)) {
        out = linear_forward(*lin, x, path);
    } else if (const auto* cv = std::get_if<Conv2D>(&l.v)) {
        out = conv_forward(*cv, x, path);
    } else if (const auto* ac = std::get_if<Activation>(&l.v)) {
        out = act_forward(*ac, x);
    } else if (const auto* at = std::get_if<L2Mha>(&l.v)) {
        out = l2_attention_forward(*at, x);
    } else if (const auto* dp = std::get_if<DpMha>(&l.v)) {
        out = dp_attention_forward(*dp, x);
    } else if (const auto* pe = std::get_if<PatchEmbed>(&l.v)) {
        out = patch_forward(*pe, x, path);
    } else if (const auto* rs = std::get_if<Residual>(&l.v)) {
        Tensor y = x;
        for (size_t i = 0; i < rs->inner.size(); ++i)
            y = forward_layer(rs->inner[i], y, path + ".inner.L" + std::to_string(i), tape);
        if (!y.same_shape(x))
            shape_fail(path, "residual body changes shape " + x.shape_str() + " -> " + y.shape_str());
        out = add(x, y);
    }
    if (tape) (*tape)[slot].out = out;
    return out;
}

Tensor forward(const Network& net, const Tensor& x, Tape* tape) {
    Tensor y = x;
    for (size_t i = 0; i < net.layers.size(); ++i)
        y = forward_layer(net.layers[i], y, "L" + std::to_string(i), tape);
    return y;
}

std::vector<int> conv_output_shape(const Conv2D& c, const std::vector<int>& in) {
    if (in.size() != 3) throw data_error("conv expects rank-3 input");
    if (c.K.rank() != 4) throw data_error("conv kernel must be rank 4");
    int kh = c.K.dim(2), kw = c.K.dim(3);
    int oh = (in[1] + 2 * c.pad - kh) / c.stride + 1;
    int ow = (in[2] + 2 * c.pad - kw) / c.stride + 1;
    if (oh <= 0 || ow <= 0) throw data_error("conv output collapses to zero size");
    return {c.K.dim(0), oh, ow};
}

Tensor conv_matrix(const Conv2D& c, const std::vector<int>& in_shape) {
    auto os = conv_output_shape(c, in_shape);
    int oc = os[0], oh = os[1], ow = os[2];
    int ic = c.K.dim(1), kh = c.K.dim(2), kw = c.K.dim(3);
    int h = in_shape[1], w = in_shape[2];
    Tensor m({oc * oh * ow, ic * h * w});
    for (int o = 0; o < oc; ++o)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                int row = (o * oh + oy) * ow + ox;
                for (int i = 0; i < ic; ++i)
                    for (int ky = 0; ky < kh; ++ky) {
                        int iy = oy * c.stride + ky - c.pad;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            int ix = ox * c.stride + kx - c.pad;
                            if (ix < 0 || ix >= w) continue;
                            m.at(row, (i * h + iy) * w + ix) = c.K.at(o, i, ky, kx);
                        }
                    }
            }
    return m;
}

Tensor conv_patch(const Conv2D& c, const Tensor& x, int oy, int ox) {
    int ic = c.K.dim(1), kh = c.K.dim(2), kw = c.K.dim(3);
    int h = x.dim(1), w = x.dim(2);
    Tensor v({ic * kh * kw});
    int k = 0;
    for (int i = 0; i < ic; ++i)
        for (int ky = 0; ky < kh; ++ky)
            for (int kx = 0; kx < kw; ++kx) {
                int iy = oy * c.stride + ky - c.pad;
                int ix = ox * c.stride + kx - c.pad;
                v[k++] = (iy < 0 || iy >= h || ix < 0 || ix >= w) ? 0.0f : x.at(i, iy, ix);
            }
    return v;
}

std::vector<int> shape_after(const Layer& l, const std::vector<int>& in) {
    if (const auto* lin = std::get_if<Linear>(&l.v)) {
        int w = lin->W.dim(1);
        if (in.size() == 1 && in[0] == w) return {lin->W.dim(0)};
        if (in.size() == 2 && in[1] == w) return {in[0], lin->W.dim(0)};
        int64_t n = 1;
        for (int d : in) n *= d;
        if (n == w) return {lin->W.dim(0)};
        throw data_error("linear expects width " + std::to_string(w));
    }
    if (const auto* cv = std::get_if<Conv2D>(&l.v)) return conv_output_shape(*cv, in);
    if (std::get_if<Activation>(&l.v)) return in;
    if (const auto* at = std::get_if<L2Mha>(&l.v)) {
        if (in.size() != 2 || in[1] != at->dim) throw data_error("l2 attention shape mismatch");
        return in;
    }
    if (const auto* dp = std::get_if<DpMha>(&l.v)) {
        if (in.size() != 2 || in[1] != dp->dim) throw data_error("dp attention shape mismatch");
        return in;
    }
    if (const auto* pe = std::get_if<PatchEmbed>(&l.v)) {
        int tokens = patch_tokens(*pe, in, "L?");
        return {tokens, pe->W.dim(0)};
    }
    const auto* rs = std::get_if<Residual>(&l.v);
    std::vector<int> s = in;
    for (const auto& il : rs->inner) s = shape_after(il, s);
    if (s != in) throw data_error("residual body changes shape");
    return in;
}

std::vector<int> output_shape(const Network& net) {
    std::vector<int> s = net.input_shape;
    for (const auto& l : net.layers) s = shape_after(l, s);
    return s;
}

namespace {

void visit_layer(Layer& l, const std::string& prefix,
                 const std::function<void(const std::string&, Tensor&)>& fn) {
    if (auto* lin = std::get_if<Linear>(&l.v)) {
        fn(prefix + ".W", lin->W);
        if (!lin->b.empty()) fn(prefix + ".b", lin->b);
    } else if (auto* cv = std::get_if<Conv2D>(&l.v)) {
        fn(prefix + ".K", cv->K);
        if (!cv->b.empty()) fn(prefix + ".b", cv->b);
    } else if (auto* at = std::get_if<L2Mha>(&l.v)) {
        fn(prefix + ".wqk", at->wqk);
        fn(prefix + ".wv", at->wv);
        fn(prefix + ".wo", at->wo);
    } else if (auto* dp = std::get_if<DpMha>(&l.v)) {
        fn(prefix + ".wq", dp->wq);
        fn(prefix + ".wk", dp->wk);
        fn(prefix + ".wv", dp->wv);
        fn(prefix + ".wo", dp->wo);
    } else if (auto* pe = std::get_if<PatchEmbed>(&l.v)) {
        fn(prefix + ".W", pe->W);
        if (!pe->b.empty()) fn(prefix + ".b", pe->b);
        fn(prefix + ".pos", pe->pos);
    } else if (auto* rs = std::get_if<Residual>(&l.v)) {
        for (size_t i = 0; i < rs->inner.size(); ++i)
            visit_layer(rs->inner[i], prefix + ".inner.L" + std::to_string(i), fn);
    }
}

} // namespace

void visit_params(Network& net, const std::function<void(const std::string&, Tensor&)>& fn) {
    for (size_t i = 0; i < net.layers.size(); ++i)
        visit_layer(net.layers[i], "L" + std::to_string(i), fn);
}

void visit_params(const Network& net,
                  const std::function<void(const std::string&, const Tensor&)>& fn) {
    visit_params(const_cast<Network&>(net),
                 [&fn](const std::string& p, Tensor& t) { fn(p, t); });
}

int64_t param_count(const Network& net) {
    int64_t n = 0;
    visit_params(net, [&n](const std::string&, const Tensor& t) { n += t.numel(); });
    return n;
}

} // namespace liplock
