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
#include "liplock/train.hpp"

#include <cmath>
#include <numeric>
#include <unordered_map>

#include "liplock/errors.hpp"
#include "liplock/grad.hpp"
#include "liplock/rng.hpp"

namespace liplock {

namespace {

int argmax(const Tensor& logits) {
    int best = 0;
    for (int64_t i = 1; i < logits.numel(); ++i)
        if (logits[i] > logits[best]) best = int(i);
    return best;
}

// v <- momentum*v + mean gradient; param <- param - step*v.
struct Sgd {
    double step;
    double momentum;
    std::unordered_map<std::string, Tensor> vel;

    void apply(Network& net, const GradMap& gm, int batch_size) {
        visit_params(net, [&](const std::string& path, Tensor& t) {
            const Tensor* g = gm.find(path);
            if (!g) return;
            auto it = vel.find(path);
            if (it == vel.end()) it = vel.emplace(path, Tensor(t.shape())).first;
            Tensor& v = it->second;
            const double inv = 1.0 / batch_size;
            for (int64_t j = 0; j < t.numel(); ++j) {
                v[j] = static_cast<float>(momentum * double(v[j]) + inv * double((*g)[j]));
                t[j] = static_cast<float>(double(t[j]) - step * double(v[j]));
            }
        });
    }
};

void check_train_config(int epochs, int batch, double step, double momentum) {
    if (epochs < 1) throw usage_error("training: epochs must be >= 1");
    if (batch < 1) throw usage_error("training: batch must be >= 1");
    if (!(step > 0)) throw usage_error("training: step must be > 0");
    if (!(momentum >= 0 && momentum < 1))
        throw usage_error("training: momentum must lie in [0, 1)");
}

} // namespace

TrainReport pretrain(Network& net, const Dataset& data, const TrainConfig& cfg) {
    check_train_config(cfg.epochs, cfg.batch, cfg.step, cfg.momentum);
    if (data.size() == 0) throw usage_error("pretrain: empty dataset");
    if (data.classes != net.classes)
        throw usage_error("pretrain: dataset classes do not match the network head");

    Rng rng(cfg.seed);
    Sgd opt{cfg.step, cfg.momentum, {}};
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    TrainReport rep;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0;
        for (int start = 0; start < data.size(); start += cfg.batch) {
            const int end = std::min(start + cfg.batch, data.size());
            GradMap gm;
            double batch_loss = 0;
            for (int i = start; i < end; ++i) {
                const Tensor& x = data.inputs[order[i]];
                const LossGrad lg = cross_entropy(forward(net, x), data.labels[order[i]]);
                batch_loss += lg.loss;
                net_backward(net, x, lg.grad, &gm);
            }
            if (!std::isfinite(batch_loss))
                throw numeric_error("training diverged: non-finite loss in epoch " +
                                    std::to_string(epoch));
            loss_sum += batch_loss;
            opt.apply(net, gm, end - start);
        }
        rep.epoch_loss.push_back(loss_sum / data.size());
    }

    int correct = 0;
    for (int i = 0; i < data.size(); ++i)
        correct += argmax(forward(net, data.inputs[i])) == data.labels[i];
    rep.train_accuracy = double(correct) / data.size();
    net.provenance = "pretrained";
    return rep;
}

namespace {

// Replaces each dot-product attention in place. Shapes thread through the
// walk so the replacement knows its token count.
void swap_attention(std::vector<Layer>& layers, std::vector<int> shape, bool& found) {
    for (auto& l : layers) {
        if (auto* r = std::get_if<Residual>(&l.v)) {
            swap_attention(r->inner, shape, found);
            continue; // residual output shape equals its input shape
        }
        std::vector<int> next = shape_after(l, shape);
        if (auto* dp = std::get_if<DpMha>(&l.v)) {
            if (shape.size() != 2)
                throw data_error("adapt: attention input is not a token matrix");
            const int d = dp->dim / dp->heads;
            L2Mha a;
            a.heads = dp->heads;
            a.dim = dp->dim;
            a.seq = shape[0];
            a.wqk = dp->wq;
            a.wv = Tensor({dp->heads, d, d});
            for (int h = 0; h < dp->heads; ++h)
                for (int i = 0; i < d; ++i) a.wv.at(h, i, i) = 1.0f;
            a.wo = Tensor({dp->dim, dp->dim});
            l.v = std::move(a);
            found = true;
        }
        shape = std::move(next);
    }
}

} // namespace

Network adapt_attention(const Network& src, const std::vector<Tensor>& inputs,
                        const AdaptConfig& cfg, std::vector<double>* loss_curve) {
    check_train_config(cfg.epochs, cfg.batch, cfg.step, cfg.momentum);
    if (inputs.empty()) throw usage_error("adapt: no distillation inputs");

    Network dst = src;
    bool found = false;
    swap_attention(dst.layers, dst.input_shape, found);
    if (!found) throw usage_error("adapt: network has no dot-product attention");
    dst.name = src.name + "-l2";
    dst.provenance = "adapted";

    std::vector<Tensor> targets;
    targets.reserve(inputs.size());
    for (const auto& x : inputs) targets.push_back(forward(src, x));

    const int n = int(inputs.size());
    Rng rng(cfg.seed);
    Sgd opt{cfg.step, cfg.momentum, {}};
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    auto trainable = [](const std::string& path) {
        return path.ends_with(".wqk") || path.ends_with(".wv") || path.ends_with(".wo");
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0;
        for (int start = 0; start < n; start += cfg.batch) {
            const int end = std::min(start + cfg.batch, n);
            GradMap gm;
            double batch_loss = 0;
            for (int i = start; i < end; ++i) {
                const Tensor& x = inputs[order[i]];
                const LossGrad lg = mse(forward(dst, x), targets[order[i]]);
                batch_loss += lg.loss;
                net_backward(dst, x, lg.grad, &gm);
            }
            if (!std::isfinite(batch_loss))
                throw numeric_error("adapt diverged: non-finite loss in epoch " +
                                    std::to_string(epoch));
            loss_sum += batch_loss;
            // Everything except the new attention tensors stays frozen.
            for (auto& [path, g] : gm.g)
                if (!trainable(path))
                    for (int64_t j = 0; j < g.numel(); ++j) g[j] = 0.0f;
            // Distillation targets are raw logits and can sit far from the
            // start, so cap the mean gradient norm to keep early steps sane.
            if (cfg.clip > 0) {
                double sq = 0;
                for (const auto& [path, g] : gm.g)
                    for (int64_t j = 0; j < g.numel(); ++j) sq += double(g[j]) * g[j];
                const int bs = end - start;
                const double gn = std::sqrt(sq) / bs;
                if (gn > cfg.clip) {
                    const float s = static_cast<float>(cfg.clip / gn);
                    for (auto& [path, g] : gm.g)
                        for (int64_t j = 0; j < g.numel(); ++j) g[j] *= s;
                }
            }
            opt.apply(dst, gm, end - start);
        }
        if (loss_curve) loss_curve->push_back(loss_sum / n);
    }
    return dst;
}

} // namespace liplock
