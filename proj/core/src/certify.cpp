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
#include "liplock/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "liplock/errors.hpp"
#include "liplock/grad.hpp"
#include "liplock/linalg.hpp"
#include "liplock/lipschitz.hpp"

namespace liplock {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double margin(const Tensor& logits, int label) {
    double own = logits[label];
    double other = -kInf;
    for (int64_t i = 0; i < logits.numel(); ++i)
        if (i != label) other = std::max(other, static_cast<double>(logits[i]));
    return own - other;
}

Tensor checked_logits(const Network& net, const Tensor& x) {
    Tensor logits = forward(net, x);
    if (logits.rank() != 1)
        throw data_error("classifier head must produce a vector, got " + logits.shape_str());
    return logits;
}

// Clamp x' back into the eps-ball around x; returns the perturbation norm.
double project_ball(Tensor& xp, const Tensor& x, double eps) {
    Tensor d = sub(xp, x);
    double n = l2_norm(d);
    if (n > eps) {
        double s = eps / n;
        for (int64_t i = 0; i < xp.numel(); ++i)
            xp[i] = static_cast<float>(x[i] + s * d[i]);
        n = eps;
    }
    return n;
}

double bound_or_infinity(const Network& net) {
    try {
        return network_lipschitz(net);
    } catch (const Error&) {
        return kInf;
    }
}

int64_t layer_forward_flops(const Layer& l, const std::vector<int>& in) {
    auto numel = [](const std::vector<int>& s) {
        int64_t n = 1;
        for (int d : s) n *= d;
        return n;
    };
    if (const auto* lin = std::get_if<Linear>(&l.v)) {
        int64_t rows = (in.size() == 2 && in[1] == lin->W.dim(1)) ? in[0] : 1;
        return rows * 2 * lin->W.dim(0) * lin->W.dim(1);
    }
    if (const auto* cv = std::get_if<Conv2D>(&l.v)) {
        std::vector<int> os = conv_output_shape(*cv, in);
        return 2LL * os[0] * os[1] * os[2] * cv->K.dim(1) * cv->K.dim(2) * cv->K.dim(3);
    }
    if (std::get_if<Activation>(&l.v)) return numel(in);
    if (const auto* at = std::get_if<L2Mha>(&l.v)) {
        int64_t n = in[0], H = at->heads, D = at->dim, d = D / H;
        return 2 * n * H * d * D + 2 * n * H * d * d + 2 * n * D * D + 3 * H * n * n * d +
               5 * H * n * n + 2 * H * n * n * d;
    }
    if (const auto* dp = std::get_if<DpMha>(&l.v)) {
        int64_t n = in[0], H = dp->heads, D = dp->dim, d = D / H;
        return 3 * (2 * n * H * d * D) + 2 * n * D * D + 2 * H * n * n * d + 5 * H * n * n +
               2 * H * n * n * d;
    }
    if (const auto* pe = std::get_if<PatchEmbed>(&l.v)) {
        int64_t tokens = patch_tokens(*pe, in);
        return 2 * tokens * pe->W.dim(0) * (pe->W.dim(1) + 1);
    }
    if (const auto* rs = std::get_if<Residual>(&l.v)) {
        int64_t total = numel(in); // skip add
        std::vector<int> s = in;
        for (const Layer& il : rs->inner) {
            total += layer_forward_flops(il, s);
            s = shape_after(il, s);
        }
        return total;
    }
    throw data_error("flop_count: unsupported layer kind");
}

// One PGD run: ascent from `start` inside the eps-ball around x. Returns
// the iterate with the highest loss seen.
Tensor pgd_run(const Network& net, const Tensor& x, Tensor xp, int label, double eps,
               int steps, double step_size, uint64_t seed) {
    Rng rng(seed);
    project_ball(xp, x, eps);
    Tensor worst = xp;
    double worst_loss = cross_entropy(checked_logits(net, xp), label).loss;

    int restarts = 0;
    for (int s = 0; s < steps; ++s) {
        LossGrad lg = cross_entropy(checked_logits(net, xp), label);
        if (lg.loss > worst_loss) {
            worst_loss = lg.loss;
            worst = xp;
        }
        Tensor g = net_input_gradient(net, xp, lg.grad);
        double gn = l2_norm(g);
        if (gn == 0.0) {
            if (++restarts > 3) break;
            Tensor z = rng.gaussian(x.shape());
            double zn = std::max(l2_norm(z), 1e-30);
            double r = 0.5 * eps / zn;
            for (int64_t i = 0; i < xp.numel(); ++i)
                xp[i] = static_cast<float>(x[i] + r * z[i]);
            continue;
        }
        double a = step_size / gn;
        for (int64_t i = 0; i < xp.numel(); ++i)
            xp[i] = static_cast<float>(xp[i] + a * g[i]);
        project_ball(xp, x, eps);
    }
    double final_loss = cross_entropy(checked_logits(net, xp), label).loss;
    if (final_loss > worst_loss) worst = xp;
    return worst;
}

int64_t constrain_epoch_flops(const std::vector<Layer>& layers) {
    int64_t total = 0;
    for (const Layer& l : layers) {
        if (const auto* lin = std::get_if<Linear>(&l.v)) {
            total += 6LL * lin->W.dim(0) * lin->W.dim(1);
        } else if (const auto* cv = std::get_if<Conv2D>(&l.v)) {
            total += 6LL * cv->K.numel();
        } else if (const auto* pe = std::get_if<PatchEmbed>(&l.v)) {
            total += 6LL * pe->W.numel();
        } else if (const auto* at = std::get_if<L2Mha>(&l.v)) {
            total += 6LL * (at->wqk.numel() + at->wv.numel() + at->wo.numel());
        } else if (const auto* rs = std::get_if<Residual>(&l.v)) {
            total += constrain_epoch_flops(rs->inner);
        }
    }
    return total;
}

} // namespace

int predict(const Network& net, const Tensor& x) {
    Tensor logits = checked_logits(net, x);
    int best = 0;
    for (int64_t i = 1; i < logits.numel(); ++i)
        if (logits[i] > logits[best]) best = static_cast<int>(i);
    return best;
}

double clean_accuracy(const Network& net, const std::vector<Tensor>& inputs,
                      const std::vector<int>& labels) {
    if (inputs.size() != labels.size())
        throw usage_error("accuracy: inputs and labels disagree in length");
    if (inputs.empty()) throw usage_error("accuracy: empty dataset");
    int hits = 0;
    for (size_t i = 0; i < inputs.size(); ++i)
        if (predict(net, inputs[i]) == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(inputs.size());
}

bool certify_sample(const Network& net, const Tensor& x, int label, double eps) {
    return certify_sample(net, x, label, eps, network_lipschitz(net));
}

bool certify_sample(const Network& net, const Tensor& x, int label, double eps,
                    double lipschitz) {
    if (eps < 0) throw usage_error("certify: eps must be >= 0");
    Tensor logits = checked_logits(net, x);
    if (label < 0 || label >= logits.numel()) throw usage_error("certify: label out of range");
    double m = margin(logits, label);
    return m > std::sqrt(2.0) * eps * lipschitz;
}

Tensor pgd_attack(const Network& net, const Tensor& x, int label, double eps, int steps,
                  double step_size, uint64_t seed) {
    if (eps < 0) throw usage_error("pgd: eps must be >= 0");
    if (steps < 1) throw usage_error("pgd: steps must be >= 1");
    if (eps == 0.0) return x;
    if (step_size <= 0.0) step_size = 2.5 * eps / steps;
    return pgd_run(net, x, x, label, eps, steps, step_size, seed);
}

double empirical_lipschitz_lower_bound(const Network& net, int n_pairs,
                                       const std::function<Tensor(Rng&)>& sampler,
                                       uint64_t seed) {
    if (n_pairs < 1) throw usage_error("lower bound: n_pairs must be >= 1");
    Rng rng(seed);
    double best = 0.0;
    const double scales[] = {1e-3, 1e-2, 1e-1, 1.0};

    for (int p = 0; p < n_pairs; ++p) {
        Tensor x = sampler(rng);
        Tensor fx = forward(net, x);
        Tensor u = rng.gaussian(x.shape());
        double un = std::max(l2_norm(u), 1e-30);
        for (int64_t i = 0; i < u.numel(); ++i) u[i] = static_cast<float>(u[i] / un);

        for (double scale : scales) {
            Tensor xz = x;
            axpy_inplace(xz, static_cast<float>(scale), u);
            Tensor d = sub(xz, x); // effective step after rounding
            double dn = l2_norm(d);
            if (dn == 0.0) continue;
            double q = l2_norm(sub(forward(net, xz), fx)) / dn;
            best = std::max(best, q);
        }

        // Power refinement of the direction at the smallest scale: forward
        // difference approximates J u, a backward pass pulls it back.
        const double h = 1e-3;
        for (int it = 0; it < 5; ++it) {
            Tensor xz = x;
            axpy_inplace(xz, static_cast<float>(h), u);
            Tensor d = sub(xz, x);
            double dn = l2_norm(d);
            if (dn == 0.0) break;
            Tensor ju = sub(forward(net, xz), fx);
            best = std::max(best, l2_norm(ju) / dn);
            Tensor v = net_input_gradient(net, x, ju); // ~ J^T J u
            double vn = l2_norm(v);
            if (vn == 0.0) break;
            for (int64_t i = 0; i < v.numel(); ++i) v[i] = static_cast<float>(v[i] / vn);
            u = std::move(v);
        }
    }
    return best;
}

CertReport evaluate(const Network& net, const std::vector<Tensor>& inputs,
                    const std::vector<int>& labels, double eps, const AttackConfig& attack) {
    if (inputs.empty()) throw usage_error("evaluate: empty dataset");
    if (inputs.size() != labels.size())
        throw usage_error("evaluate: inputs and labels disagree in length");
    if (eps < 0) throw usage_error("evaluate: eps must be >= 0");
    if (attack.steps < 1) throw usage_error("evaluate: attack steps must be >= 1");

    CertReport rep;
    rep.model = net.name;
    rep.epsilon = eps;
    rep.samples = static_cast<int>(inputs.size());
    rep.lipschitz_upper = bound_or_infinity(net);
    rep.flops = flop_count(net, FlopPhase::forward);

    int clean = 0, robust = 0, certified = 0;
    Rng seeds(attack.seed);
    for (size_t i = 0; i < inputs.size(); ++i) {
        const Tensor& x = inputs[i];
        int label = labels[i];
        bool ok = predict(net, x) == label;
        if (ok) ++clean;

        bool survives = ok;
        if (ok && eps > 0.0) {
            double step = attack.step_size > 0.0 ? attack.step_size : 2.5 * eps / attack.steps;
            uint64_t base = seeds.split(static_cast<uint64_t>(i)).seed();
            for (int r = 0; r < std::max(attack.restarts, 1) && survives; ++r) {
                Tensor start = x;
                if (r > 0) {
                    Rng rr(mix64(base + static_cast<uint64_t>(r)));
                    Tensor z = rr.gaussian(x.shape());
                    double zn = std::max(l2_norm(z), 1e-30);
                    axpy_inplace(start, static_cast<float>(rr.uniform() * eps / zn), z);
                }
                Tensor adv = pgd_run(net, x, start, label, eps, attack.steps, step,
                                     base + static_cast<uint64_t>(r));
                survives = predict(net, adv) == label;
            }
        }
        if (survives) ++robust;

        bool cert = ok && certify_sample(net, x, label, eps, rep.lipschitz_upper);
        if (cert) ++certified;
        if (cert && !survives)
            throw std::logic_error("certified sample broken by PGD: soundness violation");
    }

    double n = static_cast<double>(inputs.size());
    rep.clean_acc = clean / n;
    rep.pgd_acc = robust / n;
    rep.cert_acc = certified / n;

    const std::vector<Tensor>* data = &inputs;
    rep.lipschitz_lower = empirical_lipschitz_lower_bound(
        net, std::min(attack.lower_pairs, rep.samples),
        [data](Rng& r) { return (*data)[static_cast<size_t>(r.below(static_cast<int64_t>(data->size())))]; },
        attack.seed ^ 0x5ca1eu);

    if (!(rep.cert_acc <= rep.pgd_acc && rep.pgd_acc <= rep.clean_acc))
        throw std::logic_error("accuracy ordering violated");
    if (rep.lipschitz_lower > rep.lipschitz_upper * (1.0 + 1e-9))
        throw std::logic_error("empirical lower bound exceeds the analytic upper bound");
    return rep;
}

int64_t flop_count(const Network& net, FlopPhase phase) {
    if (phase == FlopPhase::constrain_epoch) return constrain_epoch_flops(net.layers);
    int64_t total = 0;
    std::vector<int> shape = net.input_shape;
    for (const Layer& l : net.layers) {
        total += layer_forward_flops(l, shape);
        shape = shape_after(l, shape);
    }
    return phase == FlopPhase::train_step ? 3 * total : total;
}

} // namespace liplock
