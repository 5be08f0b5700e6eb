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
#include "liplock/constrain.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>
#include <unordered_map>

#include "liplock/errors.hpp"
#include "liplock/grad.hpp"
#include "liplock/lipschitz.hpp"
#include "liplock/numerics.hpp"
#include "liplock/rng.hpp"

namespace liplock {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// z[n] = sum_m W(n,m) xrow[m]. The trace targets and the constraint both go
// through this one accumulation order, so the anchor sits on the constraint
// boundary exactly instead of within rounding noise of it.
double row_response(const Mat& W, int n, const double* xrow) {
    const double* wr = W.a.data() + static_cast<size_t>(n) * W.c;
    double acc = 0.0;
    for (int m = 0; m < W.c; ++m) acc += wr[m] * xrow[m];
    return acc;
}

// r = z - P(z), P the projection onto the activation subdifferential at y.
double residual_component(TraceAct act, double y, double z) {
    if (act == TraceAct::identity) return z;
    if (y < 0.0) throw data_error("inconsistent trace: negative relu output");
    if (y > 0.0) return z;
    return z > 0.0 ? z : 0.0;
}

void check_trace(const Mat& W, const LayerTrace& tr, int j) {
    if (j < 0 || j >= tr.batches)
        throw usage_error("batch index " + std::to_string(j) + " outside [0, " +
                          std::to_string(tr.batches) + ")");
    if (tr.X.r != tr.batches * tr.batch || tr.Y.r != tr.X.r)
        throw usage_error("trace rows do not match J*T");
    if (W.c != tr.X.c || W.r != tr.Y.c)
        throw usage_error("weight shape does not match the trace");
    if (!tr.bias.empty() && static_cast<int>(tr.bias.size()) != tr.Y.c)
        throw usage_error("trace bias length does not match the targets");
}

Mat soft_threshold_mat(const Mat& W, double beta) {
    Mat out = W;
    for (double& v : out.a) v = soft_threshold(v, beta);
    return out;
}

double max_batch_residual(const Mat& W, const LayerTrace& tr, double eta) {
    double r = -kInf;
    for (int j = 0; j < tr.batches; ++j) r = std::max(r, constraint_value(W, tr, j, eta));
    return r;
}

double bound_or_infinity(const Network& net) {
    try {
        return network_lipschitz(net);
    } catch (const Error&) {
        return kInf;
    }
}

bool params_finite(const Network& net) {
    bool ok = true;
    visit_params(net, [&ok](const std::string&, const Tensor& t) {
        if (!t.all_finite()) ok = false;
    });
    return ok;
}

} // namespace

void ConstrainConfig::validate() const {
    if (!(beta >= 0.0)) throw usage_error("config: beta must be >= 0");
    if (!(eta >= 0.0)) throw usage_error("config: eta must be >= 0");
    if (!(lambda > 0.0 && lambda < 2.0)) throw usage_error("config: lambda must lie in ]0, 2[");
    if (dr_epochs < 1) throw usage_error("config: dr_epochs must be >= 1");
    if (proj_epochs < 1) throw usage_error("config: proj_epochs must be >= 1");
    if (!(dr_tol >= 0.0)) throw usage_error("config: dr_tol must be >= 0");
    if (batch < 1) throw usage_error("config: batch must be >= 1");
    if (trace_cap < 1) throw usage_error("config: trace_cap must be >= 1");
    if (threads < 0) throw usage_error("config: threads must be >= 0");
    if (finetune_epochs < 0) throw usage_error("config: finetune_epochs must be >= 0");
    if (!(finetune_step > 0.0)) throw usage_error("config: finetune_step must be > 0");
    if (finetune_batch < 1) throw usage_error("config: finetune_batch must be >= 1");
}

double ConstrainConfig::effective_proj_tol(int T) const {
    if (proj_tol > 0.0) return proj_tol;
    return 1e-6 * T * std::max(eta, 1.0);
}

std::vector<double> subdiff_project(TraceAct kind, const std::vector<double>& y,
                                    const std::vector<double>& z) {
    if (y.size() != z.size()) throw usage_error("subdiff_project: y and z sizes differ");
    std::vector<double> p(z.size(), 0.0);
    if (kind == TraceAct::identity) return p;
    for (size_t i = 0; i < z.size(); ++i) {
        if (y[i] < 0.0) throw data_error("inconsistent trace: negative relu output");
        if (y[i] == 0.0) p[i] = std::min(z[i], 0.0);
    }
    return p;
}

double subdiff_distance_sq(TraceAct kind, const std::vector<double>& y,
                           const std::vector<double>& z) {
    std::vector<double> p = subdiff_project(kind, y, z);
    double s = 0.0;
    for (size_t i = 0; i < z.size(); ++i) {
        double d = z[i] - p[i];
        s += d * d;
    }
    return s;
}

double constraint_value(const Mat& W, const LayerTrace& tr, int j, double eta) {
    check_trace(W, tr, j);
    const bool has_bias = !tr.bias.empty();
    double sum = 0.0;
    for (int t = j * tr.batch; t < (j + 1) * tr.batch; ++t) {
        const double* xrow = tr.X.a.data() + static_cast<size_t>(t) * tr.X.c;
        const double* yrow = tr.Y.a.data() + static_cast<size_t>(t) * tr.Y.c;
        for (int n = 0; n < W.r; ++n) {
            double z = row_response(W, n, xrow) + (has_bias ? tr.bias[n] : 0.0) - yrow[n];
            double r = residual_component(tr.act, yrow[n], z);
            sum += r * r;
        }
    }
    return sum - tr.batch * eta;
}

Mat constraint_gradient(const Mat& W, const LayerTrace& tr, int j, bool identity_form) {
    check_trace(W, tr, j);
    const bool has_bias = !tr.bias.empty();
    Mat G(W.r, W.c);
    for (int t = j * tr.batch; t < (j + 1) * tr.batch; ++t) {
        const double* xrow = tr.X.a.data() + static_cast<size_t>(t) * tr.X.c;
        const double* yrow = tr.Y.a.data() + static_cast<size_t>(t) * tr.Y.c;
        for (int n = 0; n < W.r; ++n) {
            double z = row_response(W, n, xrow) + (has_bias ? tr.bias[n] : 0.0) - yrow[n];
            double r = identity_form ? z : residual_component(tr.act, yrow[n], z);
            if (r == 0.0) continue;
            double* grow = G.a.data() + static_cast<size_t>(n) * G.c;
            for (int m = 0; m < G.c; ++m) grow[m] += 2.0 * r * xrow[m];
        }
    }
    return G;
}

ProjectionResult project_accuracy_set(const Mat& W, const LayerTrace& tr, double eta,
                                      const ConstrainConfig& cfg) {
    if (tr.batches < 1) throw usage_error("projection needs at least one batch");
    const double tol = cfg.effective_proj_tol(tr.batch);
    Mat cur = W;
    const Mat& anchor = W;
    Mat best = cur;
    double best_res = kInf;
    int sweeps = 0;

    for (int sweep = 1; sweep <= cfg.proj_epochs; ++sweep) {
        sweeps = sweep;
        bool updated = false;
        double pass_max = -kInf;
        for (int j = 0; j < tr.batches; ++j) {
            double c = constraint_value(cur, tr, j, eta);
            pass_max = std::max(pass_max, c);
            if (c <= tol) continue;
            updated = true;

            Mat g = constraint_gradient(cur, tr, j, cfg.identity_form_gradient);
            double gn = dot(g, g);
            if (gn == 0.0) throw numeric_error("infeasible flat constraint");
            const double step = -c / gn; // cut step d = step * g

            // Anchored three-branch update: move to the point of the
            // halfspace cut nearest the anchor, subject to the memory cut
            // through the current iterate.
            Mat diff = sub(anchor, cur);
            const double mu = dot(diff, diff);
            const double nu = c * c / gn; // |d|^2
            const double pi = -step * dot(diff, g);
            double zeta = mu * nu - pi * pi;
            if (zeta < 0.0) zeta = 0.0;

            if (zeta <= 1e-12 * mu * nu) {
                // Colinear cuts (always the case on the first step, where
                // the iterate is the anchor). pi < 0 here means the cuts
                // admit no common point, which only arises from an
                // infeasible trace; the plain step is the sane fallback.
                axpy(cur, step, g);
            } else if (pi * nu >= zeta) {
                cur = anchor;
                axpy(cur, (1.0 + pi / nu) * step, g);
            } else {
                const double s = nu / zeta;
                for (size_t i = 0; i < cur.a.size(); ++i)
                    cur.a[i] += s * (pi * diff.a[i] + mu * step * g.a[i]);
            }
        }
        if (!updated) return {cur, pass_max, true, sweep};

        double res = max_batch_residual(cur, tr, eta);
        if (res < best_res) {
            best_res = res;
            best = cur;
        }
        if (res <= tol) return {cur, res, true, sweep};
    }
    return {best, best_res, best_res <= tol, sweeps};
}

LayerResult constrain_layer(const Mat& W0, const LayerTrace& tr, const ConstrainConfig& cfg) {
    cfg.validate();
    const double tol = cfg.effective_proj_tol(tr.batch);

    LayerResult out;
    out.l1_before = l1_norm(W0);

    Mat what = W0;
    Mat wn = soft_threshold_mat(what, cfg.beta);
    {
        double r = max_batch_residual(wn, tr, cfg.eta);
        out.steps.push_back({l1_norm(wn), r, r <= tol});
    }
    for (int n = 1; n <= cfg.dr_epochs; ++n) {
        out.iterations = n;
        Mat refl(wn.r, wn.c);
        for (size_t i = 0; i < refl.a.size(); ++i) refl.a[i] = 2.0 * wn.a[i] - what.a[i];
        ProjectionResult pr = project_accuracy_set(refl, tr, cfg.eta, cfg);
        for (size_t i = 0; i < what.a.size(); ++i) what.a[i] += cfg.lambda * (pr.W.a[i] - wn.a[i]);
        Mat wnext = soft_threshold_mat(what, cfg.beta);

        double r = max_batch_residual(wnext, tr, cfg.eta);
        out.steps.push_back({l1_norm(wnext), r, r <= tol});
        double drift = frobenius_norm(sub(wnext, wn));
        double base = frobenius_norm(wn);
        wn = std::move(wnext);
        if (drift <= cfg.dr_tol * std::max(base, 1e-300)) break;
    }

    // One more projection so the guarantee is unconditional: the returned
    // matrix is feasible within tolerance whenever the set is reachable.
    ProjectionResult polish = project_accuracy_set(wn, tr, cfg.eta, cfg);
    out.W = std::move(polish.W);
    out.l1_after = l1_norm(out.W);
    out.residual = polish.max_residual;
    out.feasible = polish.feasible;
    return out;
}

namespace {

// One constrainable weight matrix and its row-collection state.
struct UnitSpec {
    std::string layer_path;  // tape path of the owning layer
    std::string tensor_path; // parameter path for gather/write-back
    int head = -1;
    std::string kind;
    TraceAct act = TraceAct::identity;
    bool collect_y = false; // relu targets read from the activation tape
    std::string act_path;
    std::vector<double> bias;
    int in_dim = 0, out_dim = 0;
    int rows_per_sample = 0;

    std::vector<int64_t> keep; // kept global row indices, sorted
    size_t kpos = 0;
    int64_t seen = 0;
    std::vector<double> xs, ys;
};

bool wants_row(const UnitSpec& u) {
    return u.kpos < u.keep.size() && u.keep[u.kpos] == u.seen;
}

void skip_row(UnitSpec& u) { ++u.seen; }

void take_row(UnitSpec& u, const float* x, const float* y) {
    for (int i = 0; i < u.in_dim; ++i) u.xs.push_back(x[i]);
    if (u.collect_y)
        for (int i = 0; i < u.out_dim; ++i) u.ys.push_back(y[i]);
    ++u.kpos;
    ++u.seen;
}

void enumerate_units(const std::vector<Layer>& layers, const std::string& prefix,
                     std::vector<int> shape, std::vector<UnitSpec>& units) {
    for (size_t i = 0; i < layers.size(); ++i) {
        const Layer& l = layers[i];
        std::string lp = prefix + "L" + std::to_string(i);
        const Activation* next_act = nullptr;
        std::string next_path;
        if (i + 1 < layers.size())
            if (const auto* a = std::get_if<Activation>(&layers[i + 1].v)) {
                next_act = a;
                next_path = prefix + "L" + std::to_string(i + 1);
            }

        if (const auto* lin = std::get_if<Linear>(&l.v)) {
            UnitSpec u;
            u.layer_path = lp;
            u.tensor_path = lp + ".W";
            u.kind = "linear";
            u.out_dim = lin->W.dim(0);
            u.in_dim = lin->W.dim(1);
            u.rows_per_sample =
                (shape.size() == 2 && shape[1] == u.in_dim) ? shape[0] : 1;
            if (next_act && next_act->kind == Act::relu) {
                u.act = TraceAct::relu;
                u.collect_y = true;
                u.act_path = next_path;
                for (int64_t k = 0; k < lin->b.numel(); ++k) u.bias.push_back(lin->b[k]);
            }
            units.push_back(std::move(u));
        } else if (const auto* cv = std::get_if<Conv2D>(&l.v)) {
            std::vector<int> os = conv_output_shape(*cv, shape);
            UnitSpec u;
            u.layer_path = lp;
            u.tensor_path = lp + ".K";
            u.kind = "conv";
            u.out_dim = cv->K.dim(0);
            u.in_dim = cv->K.dim(1) * cv->K.dim(2) * cv->K.dim(3);
            u.rows_per_sample = os[1] * os[2];
            if (next_act && next_act->kind == Act::relu) {
                u.act = TraceAct::relu;
                u.collect_y = true;
                u.act_path = next_path;
                for (int64_t k = 0; k < cv->b.numel(); ++k) u.bias.push_back(cv->b[k]);
            }
            units.push_back(std::move(u));
        } else if (const auto* pe = std::get_if<PatchEmbed>(&l.v)) {
            UnitSpec u;
            u.layer_path = lp;
            u.tensor_path = lp + ".W";
            u.kind = "patch";
            u.out_dim = pe->W.dim(0);
            u.in_dim = pe->W.dim(1);
            u.rows_per_sample = patch_tokens(*pe, shape, lp);
            units.push_back(std::move(u));
        } else if (const auto* at = std::get_if<L2Mha>(&l.v)) {
            int d = at->dim / at->heads;
            int tokens = shape.size() == 2 ? shape[0] : 0;
            UnitSpec qk;
            qk.layer_path = lp;
            qk.tensor_path = lp + ".wqk";
            qk.kind = "attn_qk";
            qk.out_dim = at->heads * d;
            qk.in_dim = at->dim;
            qk.rows_per_sample = tokens;
            units.push_back(std::move(qk));
            for (int h = 0; h < at->heads; ++h) {
                UnitSpec uv;
                uv.layer_path = lp;
                uv.tensor_path = lp + ".wv";
                uv.head = h;
                uv.kind = "attn_v";
                uv.out_dim = d;
                uv.in_dim = d;
                uv.rows_per_sample = tokens;
                units.push_back(std::move(uv));
            }
            UnitSpec uo;
            uo.layer_path = lp;
            uo.tensor_path = lp + ".wo";
            uo.kind = "attn_o";
            uo.out_dim = at->dim;
            uo.in_dim = at->dim;
            uo.rows_per_sample = tokens;
            units.push_back(std::move(uo));
        } else if (const auto* rs = std::get_if<Residual>(&l.v)) {
            enumerate_units(rs->inner, lp + ".inner.", shape, units);
        }
        // Activation layers carry no weights; dot-product attention has no
        // finite bound to lower, so constraining it is pointless.
        shape = shape_after(l, shape);
    }
}

void capture_sample(const Network& net, const Tensor& x, std::vector<UnitSpec>& units) {
    Tape tape;
    forward(net, x, &tape);
    std::unordered_map<std::string, const TapeEntry*> entry;
    for (const auto& e : tape) entry[e.path] = &e;

    for (size_t ui = 0; ui < units.size();) {
        UnitSpec& u = units[ui];
        const TapeEntry* te = entry.at(u.layer_path);

        if (u.kind == "linear") {
            const TapeEntry* ae = u.collect_y ? entry.at(u.act_path) : nullptr;
            const Tensor& in = te->in;
            if (in.rank() == 2 && in.dim(1) == u.in_dim) {
                for (int r = 0; r < in.dim(0); ++r) {
                    if (!wants_row(u)) {
                        skip_row(u);
                        continue;
                    }
                    take_row(u, in.data() + static_cast<size_t>(r) * u.in_dim,
                             ae ? ae->out.data() + static_cast<size_t>(r) * u.out_dim : nullptr);
                }
            } else {
                if (wants_row(u))
                    take_row(u, in.data(), ae ? ae->out.data() : nullptr);
                else
                    skip_row(u);
            }
            ++ui;
        } else if (u.kind == "conv") {
            const auto* cv = std::get_if<Conv2D>(&te->layer->v);
            std::vector<int> os = conv_output_shape(*cv, te->in.shape());
            const TapeEntry* ae = u.collect_y ? entry.at(u.act_path) : nullptr;
            std::vector<float> ybuf(u.collect_y ? u.out_dim : 0);
            for (int oy = 0; oy < os[1]; ++oy)
                for (int ox = 0; ox < os[2]; ++ox) {
                    if (!wants_row(u)) {
                        skip_row(u);
                        continue;
                    }
                    Tensor patch = conv_patch(*cv, te->in, oy, ox);
                    if (u.collect_y)
                        for (int o = 0; o < u.out_dim; ++o) ybuf[o] = ae->out.at(o, oy, ox);
                    take_row(u, patch.data(), ybuf.data());
                }
            ++ui;
        } else if (u.kind == "patch") {
            const auto* pe = std::get_if<PatchEmbed>(&te->layer->v);
            int tokens = patch_tokens(*pe, te->in.shape(), u.layer_path);
            for (int t = 0; t < tokens; ++t) {
                if (!wants_row(u)) {
                    skip_row(u);
                    continue;
                }
                Tensor col = patch_column(*pe, te->in, t);
                take_row(u, col.data(), nullptr);
            }
            ++ui;
        } else {
            // Attention group: attn_qk, one attn_v per head, attn_o were
            // enumerated consecutively from this layer.
            const auto* at = std::get_if<L2Mha>(&te->layer->v);
            const int heads = at->heads, d = at->dim / at->heads;
            const int n = te->in.dim(0);
            const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

            UnitSpec& uqk = units[ui];
            for (int r = 0; r < n; ++r) {
                if (wants_row(uqk))
                    take_row(uqk, te->in.data() + static_cast<size_t>(r) * at->dim, nullptr);
                else
                    skip_row(uqk);
            }

            Tensor concat({n, at->dim});
            for (int h = 0; h < heads; ++h) {
                Tensor y = map_rows(slice_first(at->wqk, h), te->in);
                UnitSpec& uv = units[ui + 1 + h];
                for (int r = 0; r < n; ++r) {
                    if (wants_row(uv))
                        take_row(uv, y.data() + static_cast<size_t>(r) * d, nullptr);
                    else
                        skip_row(uv);
                }
                Tensor s({n, n});
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b) {
                        double acc = 0.0;
                        for (int k = 0; k < d; ++k) {
                            double df = static_cast<double>(y.at(a, k)) - y.at(b, k);
                            acc += df * df;
                        }
                        s.at(a, b) = static_cast<float>(-acc * inv_sqrt_d);
                    }
                Tensor p = softmax_rows(s);
                Tensor v = map_rows(slice_first(at->wv, h), y);
                Tensor o = matmul(p, v);
                for (int a = 0; a < n; ++a)
                    for (int k = 0; k < d; ++k) concat.at(a, h * d + k) = o.at(a, k);
            }
            UnitSpec& uo = units[ui + 1 + heads];
            for (int r = 0; r < n; ++r) {
                if (wants_row(uo))
                    take_row(uo, concat.data() + static_cast<size_t>(r) * at->dim, nullptr);
                else
                    skip_row(uo);
            }
            ui += 2 + static_cast<size_t>(heads);
        }
    }
}

// View of a parameter tensor (or one rank-3 slice of it) as a double matrix
// with in_dim columns.
Mat unit_matrix(const Tensor& t, int head, int in_dim) {
    Tensor src = head >= 0 ? slice_first(t, head) : t;
    int rows = static_cast<int>(src.numel() / in_dim);
    Mat m(rows, in_dim);
    for (int64_t i = 0; i < src.numel(); ++i) m.a[static_cast<size_t>(i)] = src[i];
    return m;
}

void store_unit(Tensor& t, int head, const Mat& m) {
    float* dst = t.data() + (head >= 0 ? static_cast<size_t>(head) * m.size() : 0);
    for (size_t i = 0; i < m.size(); ++i) dst[i] = static_cast<float>(m.a[i]);
}

std::string report_path(const LayerTrace& tr) {
    return tr.head >= 0 ? tr.path + "." + std::to_string(tr.head) : tr.path;
}

LayerTrace build_trace(UnitSpec& u, const Mat& W0, int T) {
    int rows = static_cast<int>(u.xs.size() / static_cast<size_t>(u.in_dim));
    int J = rows / T;
    if (J < 1)
        throw usage_error("unit " + u.tensor_path + ": " + std::to_string(rows) +
                          " trace rows cannot fill a batch of " + std::to_string(T));
    int K = J * T;

    LayerTrace tr;
    tr.path = u.tensor_path;
    tr.head = u.head;
    tr.kind = u.kind;
    tr.act = u.act;
    tr.bias = u.bias;
    tr.batch = T;
    tr.batches = J;
    tr.dropped = rows - K;
    tr.X = Mat(K, u.in_dim);
    std::copy_n(u.xs.begin(), tr.X.size(), tr.X.a.begin());
    tr.Y = Mat(K, u.out_dim);
    if (u.collect_y) {
        std::copy_n(u.ys.begin(), tr.Y.size(), tr.Y.a.begin());
    } else {
        for (int t = 0; t < K; ++t) {
            const double* xrow = tr.X.a.data() + static_cast<size_t>(t) * u.in_dim;
            for (int n = 0; n < u.out_dim; ++n) tr.Y(t, n) = row_response(W0, n, xrow);
        }
    }
    u.xs.clear();
    u.xs.shrink_to_fit();
    u.ys.clear();
    u.ys.shrink_to_fit();
    return tr;
}

} // namespace

std::vector<LayerTrace> trace_layers(const Network& net, const std::vector<Tensor>& inputs,
                                     const ConstrainConfig& cfg) {
    cfg.validate();
    if (inputs.empty()) throw usage_error("trace_layers: empty dataset");
    const int n_samples =
        static_cast<int>(std::min<size_t>(inputs.size(), static_cast<size_t>(cfg.trace_cap)));

    std::vector<UnitSpec> units;
    enumerate_units(net.layers, "", net.input_shape, units);
    if (units.empty()) return {};

    for (auto& u : units) {
        int64_t total = static_cast<int64_t>(u.rows_per_sample) * n_samples;
        int64_t cap = std::min<int64_t>(total, cfg.trace_cap);
        u.keep.reserve(static_cast<size_t>(cap));
        for (int64_t i = 0; i < cap; ++i)
            u.keep.push_back(total <= cap ? i : i * total / cap);
        u.xs.reserve(static_cast<size_t>(cap) * u.in_dim);
        if (u.collect_y) u.ys.reserve(static_cast<size_t>(cap) * u.out_dim);
    }
    for (int s = 0; s < n_samples; ++s) capture_sample(net, inputs[static_cast<size_t>(s)], units);

    std::unordered_map<std::string, const Tensor*> params;
    visit_params(net, [&params](const std::string& p, const Tensor& t) { params[p] = &t; });

    std::vector<LayerTrace> traces;
    traces.reserve(units.size());
    for (auto& u : units) {
        Mat w0 = unit_matrix(*params.at(u.tensor_path), u.head, u.in_dim);
        traces.push_back(build_trace(u, w0, cfg.batch));
    }
    return traces;
}

Network constrain_network(const Network& net, const std::vector<Tensor>& inputs,
                          const std::vector<int>& labels, const ConstrainConfig& cfg,
                          ConstrainReport* report) {
    cfg.validate();
    std::vector<LayerTrace> traces = trace_layers(net, inputs, cfg);

    Network out = net;
    std::unordered_map<std::string, Tensor*> params;
    visit_params(out, [&params](const std::string& p, Tensor& t) { params[p] = &t; });

    const size_t n = traces.size();
    std::vector<Mat> w0(n);
    for (size_t i = 0; i < n; ++i)
        w0[i] = unit_matrix(*params.at(traces[i].path), traces[i].head, traces[i].X.c);

    std::vector<LayerResult> results(n);
    std::vector<UnitReport> unit_reports(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<size_t> cursor{0};

    auto worker = [&]() {
        for (;;) {
            size_t i = cursor.fetch_add(1);
            if (i >= n) return;
            try {
                results[i] = constrain_layer(w0[i], traces[i], cfg);
                UnitReport& r = unit_reports[i];
                r.path = report_path(traces[i]);
                r.kind = traces[i].kind;
                r.rows = traces[i].X.r;
                r.batches = traces[i].batches;
                r.sigma_before = spectral_norm(to_tensor(w0[i]));
                r.sigma_after = spectral_norm(to_tensor(results[i].W));
                r.l1_before = results[i].l1_before;
                r.l1_after = results[i].l1_after;
                r.residual = results[i].residual;
                r.feasible = results[i].feasible;
                r.iterations = results[i].iterations;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };

    unsigned threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                        : static_cast<unsigned>(cfg.threads);
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<size_t>(n, 1)));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (size_t i = 0; i < n; ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const Error& e) {
            throw Error(e.kind(), "unit " + report_path(traces[i]) + ": " + e.what());
        } catch (const std::exception& e) {
            throw Error(ErrorKind::numeric, "unit " + report_path(traces[i]) + ": " + e.what());
        }
    }

    for (size_t i = 0; i < n; ++i) store_unit(*params.at(traces[i].path), traces[i].head, results[i].W);

    if (report) {
        report->units = std::move(unit_reports);
        report->bound_before = bound_or_infinity(net);
        report->bound_after = bound_or_infinity(out);
        report->bound_after_finetune = 0.0;
        report->finetune_loss.clear();
        report->finetuned = false;
    }

    if (cfg.finetune_epochs > 0) {
        FineTuneResult ft = fine_tune(out, inputs, labels, cfg.finetune_epochs,
                                      cfg.finetune_step, cfg.finetune_batch, cfg.seed);
        out = std::move(ft.net);
        if (report) {
            report->finetuned = true;
            report->finetune_loss = std::move(ft.epoch_loss);
            report->bound_after_finetune = ft.bound_after;
        }
    }
    return out;
}

FineTuneResult fine_tune(const Network& net, const std::vector<Tensor>& inputs,
                         const std::vector<int>& labels, int epochs, double step, int batch,
                         uint64_t seed) {
    if (epochs < 0) throw usage_error("fine_tune: epochs must be >= 0");
    if (batch < 1) throw usage_error("fine_tune: batch must be >= 1");
    if (inputs.size() != labels.size())
        throw usage_error("fine_tune: inputs and labels disagree in length");

    FineTuneResult res;
    res.net = net;
    res.bound_before = bound_or_infinity(net);
    if (epochs == 0 || inputs.empty()) {
        res.bound_after = res.bound_before;
        return res;
    }

    Rng rng(seed);
    Network good = res.net;
    std::vector<int> order(inputs.size());
    std::iota(order.begin(), order.end(), 0);

    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        double total = 0.0;
        for (size_t off = 0; off < order.size(); off += static_cast<size_t>(batch)) {
            size_t hi = std::min(off + static_cast<size_t>(batch), order.size());
            GradMap gm;
            for (size_t k = off; k < hi; ++k) {
                const Tensor& x = inputs[static_cast<size_t>(order[k])];
                LossGrad lg = cross_entropy(forward(res.net, x), labels[static_cast<size_t>(order[k])]);
                total += lg.loss;
                net_backward(res.net, x, lg.grad, &gm);
            }
            double scale = step / static_cast<double>(hi - off);
            visit_params(res.net, [&](const std::string& p, Tensor& t) {
                const Tensor* g = gm.find(p);
                if (!g) return;
                for (int64_t i = 0; i < t.numel(); ++i)
                    t[i] = static_cast<float>(static_cast<double>(t[i]) -
                                              scale * static_cast<double>((*g)[i]));
            });
        }
        double mean = total / static_cast<double>(order.size());
        res.epoch_loss.push_back(mean);
        if (!std::isfinite(mean) || !params_finite(res.net)) {
            res.net = good;
            res.aborted = true;
            break;
        }
        good = res.net;
    }
    res.bound_after = bound_or_infinity(res.net);
    return res;
}

} // namespace liplock
