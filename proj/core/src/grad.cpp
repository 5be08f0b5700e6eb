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
#include "liplock/grad.hpp"

#include <cmath>

#include "liplock/errors.hpp"
#include "liplock/linalg.hpp"
#include "liplock/numerics.hpp"

namespace liplock {

void GradMap::add(const std::string& path, const Tensor& t) {
    auto it = g.find(path);
    if (it == g.end())
        g.emplace(path, t);
    else
        add_inplace(it->second, t);
}

const Tensor* GradMap::find(const std::string& path) const {
    auto it = g.find(path);
    return it == g.end() ? nullptr : &it->second;
}

namespace {

Tensor colsum(const Tensor& m) {
    Tensor s({m.dim(1)});
    for (int j = 0; j < m.dim(1); ++j) {
        double acc = 0.0;
        for (int i = 0; i < m.dim(0); ++i) acc += static_cast<double>(m.at(i, j));
        s[j] = static_cast<float>(acc);
    }
    return s;
}

Tensor outer(const Tensor& a, const Tensor& b) {
    Tensor m({a.dim(0), b.dim(0)});
    for (int i = 0; i < a.dim(0); ++i)
        for (int j = 0; j < b.dim(0); ++j) m.at(i, j) = a[i] * b[j];
    return m;
}

Tensor linear_backward(const Linear& l, const Tensor& x, const Tensor& gy,
                       const std::string& path, GradMap* gm) {
    int in = l.W.dim(1);
    if (x.rank() == 2 && x.dim(1) == in && !(x.rank() == 1)) {
        // token rows: y = x W^T + b
        if (gm) {
            gm->add(path + ".W", matmul(transpose(gy), x));
            if (!l.b.empty()) gm->add(path + ".b", colsum(gy));
        }
        return matmul(gy, l.W);
    }
    Tensor flat = (x.rank() == 1) ? x : x.reshaped({static_cast<int>(x.numel())});
    if (gm) {
        gm->add(path + ".W", outer(gy, flat));
        if (!l.b.empty()) gm->add(path + ".b", gy);
    }
    Tensor gx = matvec_t(l.W, gy);
    return (x.rank() == 1) ? gx : gx.reshaped(x.shape());
}

Tensor act_backward(const Activation& a, const Tensor& x, const Tensor& gy) {
    Tensor gx = gy;
    switch (a.kind) {
        case Act::relu:
            for (int64_t i = 0; i < gx.numel(); ++i)
                if (x[i] <= 0.0f) gx[i] = 0.0f;
            break;
        case Act::gelu:
            for (int64_t i = 0; i < gx.numel(); ++i)
                gx[i] = static_cast<float>(static_cast<double>(gx[i]) *
                                           gelu_derivative(static_cast<double>(x[i])));
            break;
        case Act::identity:
            break;
    }
    return gx;
}

Tensor conv_backward(const Conv2D& c, const Tensor& x, const Tensor& gy,
                     const std::string& path, GradMap* gm) {
    int oc = gy.dim(0), oh = gy.dim(1), ow = gy.dim(2);
    int ic = c.K.dim(1), kh = c.K.dim(2), kw = c.K.dim(3);
    int h = x.dim(1), w = x.dim(2);
    std::vector<double> gx(static_cast<size_t>(x.numel()), 0.0);
    std::vector<double> gk(static_cast<size_t>(c.K.numel()), 0.0);
    std::vector<double> gb(static_cast<size_t>(oc), 0.0);
    for (int o = 0; o < oc; ++o)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double gyv = gy.at(o, oy, ox);
                gb[static_cast<size_t>(o)] += gyv;
                for (int i = 0; i < ic; ++i)
                    for (int ky = 0; ky < kh; ++ky) {
                        int iy = oy * c.stride + ky - c.pad;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < kw; ++kx) {
                            int ix = ox * c.stride + kx - c.pad;
                            if (ix < 0 || ix >= w) continue;
                            size_t xi = (static_cast<size_t>(i) * h + iy) * w + ix;
                            size_t ki = ((static_cast<size_t>(o) * ic + i) * kh + ky) * kw + kx;
                            gx[xi] += static_cast<double>(c.K[static_cast<int64_t>(ki)]) * gyv;
                            gk[ki] += static_cast<double>(x[static_cast<int64_t>(xi)]) * gyv;
                        }
                    }
            }
    if (gm) {
        Tensor tk(c.K.shape());
        for (int64_t i = 0; i < tk.numel(); ++i) tk[i] = static_cast<float>(gk[static_cast<size_t>(i)]);
        gm->add(path + ".K", tk);
        if (!c.b.empty()) {
            Tensor tb({oc});
            for (int o = 0; o < oc; ++o) tb[o] = static_cast<float>(gb[static_cast<size_t>(o)]);
            gm->add(path + ".b", tb);
        }
    }
    Tensor out(x.shape());
    for (int64_t i = 0; i < out.numel(); ++i) out[i] = static_cast<float>(gx[static_cast<size_t>(i)]);
    return out;
}

// Backward of row-softmax: given P and dL/dP, return dL/dS.
Tensor softmax_rows_backward(const Tensor& p, const Tensor& gp) {
    int n = p.dim(0), m = p.dim(1);
    Tensor gs({n, m});
    for (int i = 0; i < n; ++i) {
        double inner = 0.0;
        for (int j = 0; j < m; ++j) inner += static_cast<double>(p.at(i, j)) * gp.at(i, j);
        for (int j = 0; j < m; ++j)
            gs.at(i, j) = static_cast<float>(static_cast<double>(p.at(i, j)) *
                                             (static_cast<double>(gp.at(i, j)) - inner));
    }
    return gs;
}

Tensor l2mha_backward(const L2Mha& a, const Tensor& x, const Tensor& gy,
                      const std::string& path, GradMap* gm) {
    const int n = x.dim(0), d = a.dim / a.heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    // Recompute the forward pieces.
    std::vector<Tensor> ys(static_cast<size_t>(a.heads));
    std::vector<Tensor> ps(static_cast<size_t>(a.heads));
    std::vector<Tensor> vs(static_cast<size_t>(a.heads));
    Tensor concat({n, a.dim});
    for (int h = 0; h < a.heads; ++h) {
        Tensor y = map_rows(slice_first(a.wqk, h), x);
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
        Tensor v = map_rows(slice_first(a.wv, h), y);
        Tensor o = matmul(p, v);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < d; ++k) concat.at(i, h * d + k) = o.at(i, k);
        ys[static_cast<size_t>(h)] = std::move(y);
        ps[static_cast<size_t>(h)] = std::move(p);
        vs[static_cast<size_t>(h)] = std::move(v);
    }

    Tensor gconcat = matmul(gy, a.wo);
    Tensor gwqk(a.wqk.shape());
    Tensor gwv(a.wv.shape());
    Tensor gx({n, a.dim});

    for (int h = 0; h < a.heads; ++h) {
        const Tensor& y = ys[static_cast<size_t>(h)];
        const Tensor& p = ps[static_cast<size_t>(h)];
        const Tensor& v = vs[static_cast<size_t>(h)];
        Tensor go({n, d});
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < d; ++k) go.at(i, k) = gconcat.at(i, h * d + k);

        Tensor gp = matmul(go, transpose(v));
        Tensor gv = matmul(transpose(p), go);
        Tensor gy_head = matmul(gv, slice_first(a.wv, h)); // value-path pullback

        // score path: s_ij = -|y_i - y_j|^2 / sqrt(d)
        Tensor gs = softmax_rows_backward(p, gp);
        // gd = -gs / sqrt(d); E = gd + gd^T; gy += 2 (diag(E 1) - E) y
        Tensor e({n, n});
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                e.at(i, j) = static_cast<float>(
                    -inv_sqrt_d * (static_cast<double>(gs.at(i, j)) + gs.at(j, i)));
        for (int i = 0; i < n; ++i) {
            double rowsum = 0.0;
            for (int j = 0; j < n; ++j) rowsum += static_cast<double>(e.at(i, j));
            for (int k = 0; k < d; ++k) {
                double acc = rowsum * static_cast<double>(y.at(i, k));
                for (int j = 0; j < n; ++j)
                    acc -= static_cast<double>(e.at(i, j)) * y.at(j, k);
                gy_head.at(i, k) = static_cast<float>(static_cast<double>(gy_head.at(i, k)) + 2.0 * acc);
            }
        }

        // gv wrt wv, gy_head wrt wqk and x
        Tensor gwv_h = matmul(transpose(gv), y);
        Tensor gwqk_h = matmul(transpose(gy_head), x);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) gwv.at(h, i, j) = gwv_h.at(i, j);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < a.dim; ++j) gwqk.at(h, i, j) = gwqk_h.at(i, j);
        add_inplace(gx, matmul(gy_head, slice_first(a.wqk, h)));
    }

    if (gm) {
        gm->add(path + ".wqk", gwqk);
        gm->add(path + ".wv", gwv);
        gm->add(path + ".wo", matmul(transpose(gy), concat));
    }
    return gx;
}

Tensor dpmha_backward(const DpMha& a, const Tensor& x, const Tensor& gy,
                      const std::string& path, GradMap* gm) {
    const int n = x.dim(0), d = a.dim / a.heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

    Tensor concat({n, a.dim});
    std::vector<Tensor> qs(static_cast<size_t>(a.heads)), ks(static_cast<size_t>(a.heads)),
        vs(static_cast<size_t>(a.heads)), ps(static_cast<size_t>(a.heads));
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
        qs[static_cast<size_t>(h)] = std::move(q);
        ks[static_cast<size_t>(h)] = std::move(k);
        vs[static_cast<size_t>(h)] = std::move(v);
        ps[static_cast<size_t>(h)] = std::move(p);
    }

    Tensor gconcat = matmul(gy, a.wo);
    Tensor gwq(a.wq.shape()), gwk(a.wk.shape()), gwv(a.wv.shape());
    Tensor gx({n, a.dim});

    for (int h = 0; h < a.heads; ++h) {
        const Tensor &q = qs[static_cast<size_t>(h)], &k = ks[static_cast<size_t>(h)],
                     &v = vs[static_cast<size_t>(h)], &p = ps[static_cast<size_t>(h)];
        Tensor go({n, d});
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < d; ++c) go.at(i, c) = gconcat.at(i, h * d + c);

        Tensor gp = matmul(go, transpose(v));
        Tensor gv = matmul(transpose(p), go);
        Tensor gs = softmax_rows_backward(p, gp);
        for (int64_t i = 0; i < gs.numel(); ++i)
            gs[i] = static_cast<float>(static_cast<double>(gs[i]) * inv_sqrt_d);
        Tensor gq = matmul(gs, k);
        Tensor gk = matmul(transpose(gs), q);

        auto put = [&](Tensor& dst, const Tensor& m) {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < a.dim; ++j) dst.at(h, i, j) = m.at(i, j);
        };
        put(gwq, matmul(transpose(gq), x));
        put(gwk, matmul(transpose(gk), x));
        put(gwv, matmul(transpose(gv), x));
        add_inplace(gx, matmul(gq, slice_first(a.wq, h)));
        add_inplace(gx, matmul(gk, slice_first(a.wk, h)));
        add_inplace(gx, matmul(gv, slice_first(a.wv, h)));
    }

    if (gm) {
        gm->add(path + ".wq", gwq);
        gm->add(path + ".wk", gwk);
        gm->add(path + ".wv", gwv);
        gm->add(path + ".wo", matmul(transpose(gy), concat));
    }
    return gx;
}

Tensor patch_backward(const PatchEmbed& pe, const Tensor& x, const Tensor& gy,
                      const std::string& path, GradMap* gm) {
    int tokens = gy.dim(0), embed = gy.dim(1);
    int pvol = pe.W.dim(1);
    Tensor gW({embed, pvol});
    Tensor gb({embed});
    Tensor gx(x.shape());

    auto scatter = [&](int t, const Tensor& gcol) {
        if (x.rank() == 1) {
            for (int i = 0; i < pe.patch; ++i) gx[t * pe.patch + i] += gcol[i];
            return;
        }
        int c = x.dim(0), w = x.dim(2);
        int gw_ = w / pe.patch;
        int ty = t / gw_, tx = t % gw_;
        int k = 0;
        for (int ch = 0; ch < c; ++ch)
            for (int py = 0; py < pe.patch; ++py)
                for (int px = 0; px < pe.patch; ++px)
                    gx.at(ch, ty * pe.patch + py, tx * pe.patch + px) += gcol[k++];
    };

    for (int t = 0; t < tokens; ++t) {
        Tensor gyt({embed});
        for (int j = 0; j < embed; ++j) gyt[j] = gy.at(t, j);
        // column of the patch feeding token t
        Tensor col({pvol});
        if (x.rank() == 1) {
            for (int i = 0; i < pe.patch; ++i) col[i] = x[t * pe.patch + i];
        } else {
            int c = x.dim(0), w = x.dim(2);
            int gw_ = w / pe.patch;
            int ty = t / gw_, tx = t % gw_;
            int k = 0;
            for (int ch = 0; ch < c; ++ch)
                for (int py = 0; py < pe.patch; ++py)
                    for (int px = 0; px < pe.patch; ++px)
                        col[k++] = x.at(ch, ty * pe.patch + py, tx * pe.patch + px);
        }
        for (int j = 0; j < embed; ++j) {
            gb[j] += gyt[j];
            for (int i = 0; i < pvol; ++i) gW.at(j, i) += gyt[j] * col[i];
        }
        scatter(t, matvec_t(pe.W, gyt));
    }
    if (gm) {
        gm->add(path + ".W", gW);
        if (!pe.b.empty()) gm->add(path + ".b", gb);
        gm->add(path + ".pos", gy);
    }
    return gx;
}

} // namespace

Tensor backward_layer(const Layer& l, const Tensor& x, const Tensor& gy,
                      const std::string& path, GradMap* gm) {
    if (const auto* lin = std::get_if<Linear>(&l.v)) return linear_backward(*lin, x, gy, path, gm);
    if (const auto* cv = std::get_if<Conv2D>(&l.v)) return conv_backward(*cv, x, gy, path, gm);
    if (const auto* ac = std::get_if<Activation>(&l.v)) return act_backward(*ac, x, gy);
    if (const auto* at = std::get_if<L2Mha>(&l.v)) return l2mha_backward(*at, x, gy, path, gm);
    if (const auto* dp = std::get_if<DpMha>(&l.v)) return dpmha_backward(*dp, x, gy, path, gm);
    if (const auto* pe = std::get_if<PatchEmbed>(&l.v)) return patch_backward(*pe, x, gy, path, gm);
    const auto* rs = std::get_if<Residual>(&l.v);
    std::vector<Tensor> xs;
    xs.reserve(rs->inner.size() + 1);
    xs.push_back(x);
    for (size_t i = 0; i < rs->inner.size(); ++i)
        xs.push_back(forward_layer(rs->inner[i], xs.back(),
                                   path + ".inner.L" + std::to_string(i), nullptr));
    Tensor g = gy;
    for (size_t i = rs->inner.size(); i-- > 0;)
        g = backward_layer(rs->inner[i], xs[i], g, path + ".inner.L" + std::to_string(i), gm);
    return add(gy, g);
}

Tensor net_backward(const Network& net, const Tensor& x, const Tensor& gout, GradMap* gm) {
    std::vector<Tensor> xs;
    xs.reserve(net.layers.size() + 1);
    xs.push_back(x);
    for (size_t i = 0; i < net.layers.size(); ++i)
        xs.push_back(forward_layer(net.layers[i], xs.back(), "L" + std::to_string(i), nullptr));
    Tensor g = gout;
    for (size_t i = net.layers.size(); i-- > 0;)
        g = backward_layer(net.layers[i], xs[i], g, "L" + std::to_string(i), gm);
    return g;
}

Tensor net_input_gradient(const Network& net, const Tensor& x, const Tensor& gout) {
    return net_backward(net, x, gout, nullptr);
}

LossGrad cross_entropy(const Tensor& logits, int label) {
    if (logits.rank() != 1) throw data_error("cross_entropy: expected a logit vector");
    if (label < 0 || label >= logits.dim(0)) throw data_error("cross_entropy: label out of range");
    int c = logits.dim(0);
    double mx = -1e300;
    for (int j = 0; j < c; ++j) mx = std::max(mx, static_cast<double>(logits[j]));
    double z = 0.0;
    for (int j = 0; j < c; ++j) z += std::exp(static_cast<double>(logits[j]) - mx);
    LossGrad r;
    r.loss = std::log(z) + mx - static_cast<double>(logits[label]);
    r.grad = Tensor({c});
    for (int j = 0; j < c; ++j) {
        double p = std::exp(static_cast<double>(logits[j]) - mx) / z;
        r.grad[j] = static_cast<float>(p - (j == label ? 1.0 : 0.0));
    }
    return r;
}

LossGrad mse(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target)) throw data_error("mse: shape mismatch");
    LossGrad r;
    r.grad = Tensor(pred.shape());
    double acc = 0.0;
    double inv = 1.0 / static_cast<double>(pred.numel());
    for (int64_t i = 0; i < pred.numel(); ++i) {
        double d = static_cast<double>(pred[i]) - target[i];
        acc += d * d;
        r.grad[i] = static_cast<float>(2.0 * d * inv);
    }
    r.loss = acc * inv;
    return r;
}

} // namespace liplock
