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
#include "liplock/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "liplock/checkpoint.hpp"
#include "liplock/config.hpp"
#include "liplock/dataset.hpp"
#include "liplock/errors.hpp"
#include "liplock/lipschitz.hpp"
#include "liplock/report.hpp"
#include "liplock/rng.hpp"

namespace liplock {

namespace {

struct CliArgs {
    std::string config;
    std::string in;
    std::string out;
    double eps = -1.0;       // < 0: keep the config value
    uint64_t seed = 0;
    bool has_seed = false;
};

PipelineConfig make_config(const CliArgs& a) {
    PipelineConfig cfg = a.config.empty() ? PipelineConfig{} : load_config(a.config);
    if (a.has_seed) cfg.override_seed(a.seed);
    if (a.eps >= 0) cfg.evaluate.eps = a.eps;
    return cfg;
}

void make_datasets(const PipelineConfig& cfg, Dataset& train, Dataset& test) {
    const auto& d = cfg.dataset;
    if (d.kind == "blobs") {
        Dataset all = synth_blobs(d.seed, d.n, d.classes, d.dim, d.spread);
        split_dataset(all, d.test_fraction, train, test);
    } else if (d.kind == "digits") {
        Dataset all = synth_digits(d.seed, d.n);
        split_dataset(all, d.test_fraction, train, test);
    } else if (d.kind == "idx") {
        if (d.images.empty() || d.labels.empty())
            throw usage_error("dataset.kind = idx needs dataset.images and dataset.labels");
        Dataset all = load_mnist_idx(d.images, d.labels);
        if (!d.test_images.empty() || !d.test_labels.empty()) {
            if (d.test_images.empty() || d.test_labels.empty())
                throw usage_error("idx test split needs both test_images and test_labels");
            train = std::move(all);
            test = load_mnist_idx(d.test_images, d.test_labels);
            test.classes = train.classes = std::max(train.classes, test.classes);
        } else {
            split_dataset(all, d.test_fraction, train, test);
        }
    } else {
        throw usage_error("unknown dataset kind: " + d.kind);
    }
    if (train.size() == 0) throw data_error("empty training split");
}

std::string require_in(const CliArgs& a, const char* cmd) {
    if (a.in.empty())
        throw usage_error(std::string(cmd) + ": --in <checkpoint> is required");
    return a.in;
}

std::string default_out(const PipelineConfig& cfg, const std::string& stem) {
    std::filesystem::create_directories(cfg.output.dir);
    return cfg.output.dir + "/" + stem + ".ckpt";
}

std::string csv_path(const PipelineConfig& cfg) {
    std::filesystem::create_directories(cfg.output.dir);
    return cfg.output.dir + "/" + cfg.output.csv;
}

std::string bound_str(const Network& net) {
    try {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", network_lipschitz(net));
        return buf;
    } catch (const Error&) {
        return "unbounded (dot-product attention)";
    }
}

double clean_acc(const Network& net, const Dataset& d) {
    if (d.size() == 0) return 0.0;
    int ok = 0;
    for (int i = 0; i < d.size(); ++i)
        ok += predict(net, d.inputs[i]) == d.labels[i];
    return double(ok) / d.size();
}

void truncate_eval(Dataset& test, int samples) {
    if (samples > 0 && samples < test.size()) {
        test.inputs.resize(samples);
        test.labels.resize(samples);
    }
}

int cmd_pretrain(const CliArgs& a) {
    PipelineConfig cfg = make_config(a);
    Dataset train, test;
    make_datasets(cfg, train, test);
    Network net = build_model(cfg.model, train.inputs[0].shape(), train.classes,
                              cfg.model_seed);
    std::printf("pretraining %s on %s (%d train / %d test)\n", net.name.c_str(),
                train.name.c_str(), train.size(), test.size());
    const TrainReport rep = pretrain(net, train, cfg.pretrain);
    for (size_t e = 0; e < rep.epoch_loss.size(); ++e)
        std::printf("  epoch %2zu  loss %.5f\n", e + 1, rep.epoch_loss[e]);
    std::printf("train accuracy     %.4f\n", rep.train_accuracy);
    std::printf("test accuracy      %.4f\n", clean_acc(net, test));
    std::printf("lipschitz bound    %s\n", bound_str(net).c_str());
    const std::string out = a.out.empty() ? default_out(cfg, net.name) : a.out;
    save_checkpoint(net, out);
    std::printf("saved %s\n", out.c_str());
    return 0;
}

int cmd_adapt(const CliArgs& a) {
    PipelineConfig cfg = make_config(a);
    Dataset train, test;
    make_datasets(cfg, train, test);
    const Network src = load_checkpoint(require_in(a, "adapt"));
    std::printf("adapting %s: dot-product attention -> tied euclidean\n",
                src.name.c_str());
    std::vector<double> curve;
    const Network dst = adapt_attention(src, train.inputs, cfg.adapt, &curve);
    for (size_t e = 0; e < curve.size(); ++e)
        std::printf("  epoch %2zu  distill mse %.6f\n", e + 1, curve[e]);
    std::printf("source test accuracy   %.4f\n", clean_acc(src, test));
    std::printf("adapted test accuracy  %.4f\n", clean_acc(dst, test));
    std::printf("lipschitz bound        %s\n", bound_str(dst).c_str());
    const std::string out = a.out.empty() ? default_out(cfg, dst.name) : a.out;
    save_checkpoint(dst, out);
    std::printf("saved %s\n", out.c_str());
    return 0;
}

int cmd_constrain(const CliArgs& a) {
    PipelineConfig cfg = make_config(a);
    Dataset train, test;
    make_datasets(cfg, train, test);
    Network net = load_checkpoint(require_in(a, "constrain"));
    std::printf("constraining %s (beta %.4g, eta %.4g, lambda %.4g)\n",
                net.name.c_str(), cfg.constrain.beta, cfg.constrain.eta,
                cfg.constrain.lambda);
    ConstrainReport rep;
    Network locked = constrain_network(net, train.inputs, train.labels, cfg.constrain,
                                       &rep);
    for (const auto& u : rep.units)
        std::printf("  %-24s sigma %9.4g -> %-9.4g l1 %9.4g -> %-9.4g %s\n",
                    u.path.c_str(), u.sigma_before, u.sigma_after, u.l1_before,
                    u.l1_after, u.feasible ? "ok" : "residual");
    std::printf("bound before       %.6g\n", rep.bound_before);
    std::printf("bound after        %.6g\n", rep.bound_after);
    if (rep.finetuned) {
        std::printf("bound after tune   %.6g\n", rep.bound_after_finetune);
        if (!rep.finetune_loss.empty())
            std::printf("finetune loss      %.5f\n", rep.finetune_loss.back());
    }
    std::printf("test accuracy      %.4f (was %.4f)\n", clean_acc(locked, test),
                clean_acc(net, test));
    const std::string out = a.out.empty() ? default_out(cfg, net.name + "-locked") : a.out;
    save_checkpoint(locked, out);
    std::printf("saved %s\n", out.c_str());
    return 0;
}

int cmd_finetune(const CliArgs& a) {
    PipelineConfig cfg = make_config(a);
    Dataset train, test;
    make_datasets(cfg, train, test);
    Network net = load_checkpoint(require_in(a, "finetune"));
    const int epochs = cfg.constrain.finetune_epochs > 0 ? cfg.constrain.finetune_epochs : 10;
    std::printf("finetuning %s for %d epochs (step %.4g)\n", net.name.c_str(), epochs,
                cfg.constrain.finetune_step);
    const FineTuneResult r =
        fine_tune(net, train.inputs, train.labels, epochs, cfg.constrain.finetune_step,
                  cfg.constrain.finetune_batch, cfg.constrain.seed);
    for (size_t e = 0; e < r.epoch_loss.size(); ++e)
        std::printf("  epoch %2zu  loss %.5f\n", e + 1, r.epoch_loss[e]);
    if (r.aborted) std::printf("stopped early: loss went non-finite, kept last good weights\n");
    std::printf("bound before       %.6g\n", r.bound_before);
    std::printf("bound after        %.6g\n", r.bound_after);
    std::printf("test accuracy      %.4f\n", clean_acc(r.net, test));
    const std::string out = a.out.empty() ? default_out(cfg, net.name + "-ft") : a.out;
    save_checkpoint(r.net, out);
    std::printf("saved %s\n", out.c_str());
    return 0;
}

int cmd_certify(const CliArgs& a) {
    PipelineConfig cfg = make_config(a);
    Dataset train, test;
    make_datasets(cfg, train, test);
    const Network net = load_checkpoint(require_in(a, "certify"));
    truncate_eval(test, cfg.evaluate.samples);
    AttackConfig at;
    at.steps = cfg.evaluate.pgd_steps;
    at.step_size = cfg.evaluate.pgd_step;
    at.restarts = cfg.evaluate.restarts;
    at.lower_pairs = cfg.evaluate.lower_pairs;
    at.seed = cfg.evaluate.seed;
    std::printf("certifying %s at eps %.4g on %d samples\n", net.name.c_str(),
                cfg.evaluate.eps, test.size());
    const CertReport rep = evaluate(net, test.inputs, test.labels, cfg.evaluate.eps, at);
    std::fputs(report_text(rep).c_str(), stdout);
    const std::string out = a.out.empty() ? csv_path(cfg) : a.out;
    emit_report(rep, out);
    std::printf("appended %s\n", out.c_str());
    return 0;
}

int cmd_attack(const CliArgs& a) {
    PipelineConfig cfg = make_config(a);
    Dataset train, test;
    make_datasets(cfg, train, test);
    const Network net = load_checkpoint(require_in(a, "attack"));
    truncate_eval(test, cfg.evaluate.samples);
    const double eps = cfg.evaluate.eps;
    std::printf("attacking %s at eps %.4g on %d samples\n", net.name.c_str(), eps,
                test.size());
    Rng seeds(cfg.evaluate.seed);
    int clean = 0, robust = 0;
    for (int i = 0; i < test.size(); ++i) {
        const Tensor& x = test.inputs[i];
        const int label = test.labels[i];
        const bool ok = predict(net, x) == label;
        clean += ok;
        if (!ok) continue;
        const Tensor adv = pgd_attack(net, x, label, eps, cfg.evaluate.pgd_steps,
                                      cfg.evaluate.pgd_step, seeds.split(i).seed());
        robust += predict(net, adv) == label;
    }
    std::printf("clean accuracy     %.4f\n", double(clean) / test.size());
    std::printf("pgd accuracy       %.4f\n", double(robust) / test.size());
    return 0;
}

int cmd_report(const CliArgs& a) {
    PipelineConfig cfg = make_config(a);
    const std::string path = a.in.empty() ? cfg.output.dir + "/" + cfg.output.csv : a.in;
    if (path.size() > 5 && path.substr(path.size() - 5) == ".ckpt") {
        const Network net = load_checkpoint(path);
        std::printf("%s\n", describe_network(net).c_str());
        std::printf("parameters         %lld\n", (long long)param_count(net));
        std::printf("lipschitz bound    %s\n", bound_str(net).c_str());
        return 0;
    }
    const auto rows = parse_report_csv(path);
    std::printf("%-20s %8s %7s %7s %7s %12s %12s %14s %8s\n", "model", "eps", "clean",
                "pgd", "cert", "lip_upper", "lip_lower", "flops", "samples");
    for (const auto& r : rows)
        std::printf("%-20s %8.4g %7.4f %7.4f %7.4f %12.6g %12.6g %14lld %8d\n",
                    r.model.c_str(), r.epsilon, r.clean_acc, r.pgd_acc, r.cert_acc,
                    r.lipschitz_upper, r.lipschitz_lower, (long long)r.flops, r.samples);
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"lipschitz-bound locking and robustness certification for small networks"};
    app.require_subcommand(1);

    CliArgs a;
    const char* active = nullptr;
    auto add_common = [&](CLI::App* sub, const char* name) {
        sub->add_option("--config", a.config, "config file (sectioned key=value)");
        sub->add_option("--seed", a.seed, "master seed overriding every per-stage seed")
            ->each([&](const std::string&) { a.has_seed = true; });
        sub->add_option("--in", a.in, "input checkpoint (or csv for report)");
        sub->add_option("--out", a.out, "output path");
        sub->add_option("--eps", a.eps, "perturbation budget override");
        sub->callback([&, name] { active = name; });
        return sub;
    };
    add_common(app.add_subcommand("pretrain", "train a fresh model and save it"), "pretrain");
    add_common(app.add_subcommand("adapt", "swap dot-product attention for the bounded form"), "adapt");
    add_common(app.add_subcommand("constrain", "lower the lipschitz bound of a checkpoint"), "constrain");
    add_common(app.add_subcommand("finetune", "recover accuracy with plain training"), "finetune");
    add_common(app.add_subcommand("certify", "evaluate clean/pgd/certified accuracy, append csv"), "certify");
    add_common(app.add_subcommand("attack", "pgd evaluation only"), "attack");
    add_common(app.add_subcommand("report", "print a csv report table or checkpoint summary"), "report");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (std::string("pretrain") == active) return cmd_pretrain(a);
        if (std::string("adapt") == active) return cmd_adapt(a);
        if (std::string("constrain") == active) return cmd_constrain(a);
        if (std::string("finetune") == active) return cmd_finetune(a);
        if (std::string("certify") == active) return cmd_certify(a);
        if (std::string("attack") == active) return cmd_attack(a);
        if (std::string("report") == active) return cmd_report(a);
        throw std::logic_error("unreachable: no active subcommand");
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
            case ErrorKind::usage: return 1;
            case ErrorKind::data: return 2;
            case ErrorKind::numeric: return 3;
        }
        return 3;
    }
}

} // namespace liplock
