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
#include "liplock/config.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "liplock/errors.hpp"
#include "liplock/rng.hpp"

namespace liplock {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct KeyContext {
    std::string section;
    std::string key;
    int line;

    std::string where() const {
        return section + "." + key + " (line " + std::to_string(line) + ")";
    }
    [[noreturn]] void bad(const std::string& what, const std::string& value) const {
        throw usage_error("config: bad " + what + " for " + where() + ": '" + value + "'");
    }
};

int parse_int(const KeyContext& kc, const std::string& v) {
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) kc.bad("integer", v);
    return out;
}

uint64_t parse_u64(const KeyContext& kc, const std::string& v) {
    uint64_t out = 0;
    // Allow hex seeds like 0xc0de.
    int base = 10;
    const char* begin = v.data();
    const char* end = v.data() + v.size();
    if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
        base = 16;
        begin += 2;
    }
    auto [p, ec] = std::from_chars(begin, end, out, base);
    if (ec != std::errc() || p != end || begin == end) kc.bad("seed", v);
    return out;
}

double parse_double(const KeyContext& kc, const std::string& v) {
    if (v == "inf") return std::numeric_limits<double>::infinity();
    double out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) kc.bad("number", v);
    return out;
}

bool parse_bool(const KeyContext& kc, const std::string& v) {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    kc.bad("boolean", v);
}

std::vector<int> parse_int_list(const KeyContext& kc, const std::string& v) {
    std::vector<int> out;
    std::string item;
    std::istringstream ss(v);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) kc.bad("integer list", v);
        out.push_back(parse_int(kc, item));
    }
    if (out.empty()) kc.bad("integer list", v);
    return out;
}

} // namespace

void PipelineConfig::override_seed(uint64_t s) {
    dataset.seed = mix64(s ^ 0xd5u);
    model_seed = mix64(s ^ 0x30u);
    pretrain.seed = mix64(s ^ 0x74u);
    adapt.seed = mix64(s ^ 0xadu);
    constrain.seed = mix64(s ^ 0xc5u);
    evaluate.seed = mix64(s ^ 0xe7u);
}

PipelineConfig parse_config_text(const std::string& text, const std::string& origin) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line = 0;

    while (std::getline(in, raw)) {
        ++line;
        const size_t hash = raw.find('#');
        std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;

        if (s.front() == '[') {
            if (s.back() != ']')
                throw usage_error(origin + ": malformed section header (line " +
                                  std::to_string(line) + "): '" + s + "'");
            section = trim(s.substr(1, s.size() - 2));
            if (section != "dataset" && section != "model" && section != "pretrain" &&
                section != "adapt" && section != "constrain" && section != "evaluate" &&
                section != "output")
                throw usage_error(origin + ": unknown config section [" + section +
                                  "] (line " + std::to_string(line) + ")");
            continue;
        }

        const size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw usage_error(origin + ": expected key = value (line " +
                              std::to_string(line) + "): '" + s + "'");
        if (section.empty())
            throw usage_error(origin + ": key outside any section (line " +
                              std::to_string(line) + "): '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string val = trim(s.substr(eq + 1));
        if (key.empty() || val.empty())
            throw usage_error(origin + ": empty key or value (line " +
                              std::to_string(line) + "): '" + s + "'");
        const KeyContext kc{section, key, line};

        bool known = true;
        if (section == "dataset") {
            auto& d = cfg.dataset;
            if (key == "kind") {
                if (val != "digits" && val != "blobs" && val != "idx")
                    kc.bad("dataset kind", val);
                d.kind = val;
            } else if (key == "n") d.n = parse_int(kc, val);
            else if (key == "classes") d.classes = parse_int(kc, val);
            else if (key == "dim") d.dim = parse_int(kc, val);
            else if (key == "spread") d.spread = parse_double(kc, val);
            else if (key == "images") d.images = val;
            else if (key == "labels") d.labels = val;
            else if (key == "test_images") d.test_images = val;
            else if (key == "test_labels") d.test_labels = val;
            else if (key == "test_fraction") d.test_fraction = parse_double(kc, val);
            else if (key == "seed") d.seed = parse_u64(kc, val);
            else known = false;
        } else if (section == "model") {
            auto& m = cfg.model;
            if (key == "kind") {
                if (val != "mlp" && val != "conv" && val != "vit" && val != "vit_dp")
                    kc.bad("model kind", val);
                m.kind = val;
            } else if (key == "hidden") m.hidden = parse_int_list(kc, val);
            else if (key == "patch") m.patch = parse_int(kc, val);
            else if (key == "depth") m.depth = parse_int(kc, val);
            else if (key == "embed") m.embed = parse_int(kc, val);
            else if (key == "heads") m.heads = parse_int(kc, val);
            else if (key == "mlp_ratio") m.mlp_ratio = parse_int(kc, val);
            else if (key == "seed") cfg.model_seed = parse_u64(kc, val);
            else known = false;
        } else if (section == "pretrain") {
            auto& t = cfg.pretrain;
            if (key == "epochs") t.epochs = parse_int(kc, val);
            else if (key == "batch") t.batch = parse_int(kc, val);
            else if (key == "step") t.step = parse_double(kc, val);
            else if (key == "momentum") t.momentum = parse_double(kc, val);
            else if (key == "seed") t.seed = parse_u64(kc, val);
            else known = false;
        } else if (section == "adapt") {
            auto& a = cfg.adapt;
            if (key == "epochs") a.epochs = parse_int(kc, val);
            else if (key == "batch") a.batch = parse_int(kc, val);
            else if (key == "step") a.step = parse_double(kc, val);
            else if (key == "momentum") a.momentum = parse_double(kc, val);
            else if (key == "clip") a.clip = parse_double(kc, val);
            else if (key == "seed") a.seed = parse_u64(kc, val);
            else known = false;
        } else if (section == "constrain") {
            auto& c = cfg.constrain;
            if (key == "preset") {
                // Named recipes; explicit keys below a preset override it.
                if (val == "default") {
                    c.beta = 0.1;
                    c.eta = 1e-2;
                    c.lambda = 1.2;
                } else if (val == "loose") {
                    c.beta = 0.01;
                    c.eta = 0.1;
                    c.lambda = 1.2;
                } else kc.bad("preset", val);
            } else if (key == "beta") c.beta = parse_double(kc, val);
            else if (key == "eta") c.eta = parse_double(kc, val);
            else if (key == "lambda") c.lambda = parse_double(kc, val);
            else if (key == "dr_epochs") c.dr_epochs = parse_int(kc, val);
            else if (key == "proj_epochs") c.proj_epochs = parse_int(kc, val);
            else if (key == "proj_tol") c.proj_tol = parse_double(kc, val);
            else if (key == "dr_tol") c.dr_tol = parse_double(kc, val);
            else if (key == "batch") c.batch = parse_int(kc, val);
            else if (key == "trace_cap") c.trace_cap = parse_int(kc, val);
            else if (key == "threads") c.threads = parse_int(kc, val);
            else if (key == "identity_gradient")
                c.identity_form_gradient = parse_bool(kc, val);
            else if (key == "finetune_epochs") c.finetune_epochs = parse_int(kc, val);
            else if (key == "finetune_step") c.finetune_step = parse_double(kc, val);
            else if (key == "finetune_batch") c.finetune_batch = parse_int(kc, val);
            else if (key == "seed") c.seed = parse_u64(kc, val);
            else known = false;
        } else if (section == "evaluate") {
            auto& e = cfg.evaluate;
            if (key == "eps") e.eps = parse_double(kc, val);
            else if (key == "pgd_steps") e.pgd_steps = parse_int(kc, val);
            else if (key == "pgd_step") e.pgd_step = parse_double(kc, val);
            else if (key == "restarts") e.restarts = parse_int(kc, val);
            else if (key == "lower_pairs") e.lower_pairs = parse_int(kc, val);
            else if (key == "samples") e.samples = parse_int(kc, val);
            else if (key == "seed") e.seed = parse_u64(kc, val);
            else known = false;
        } else if (section == "output") {
            auto& o = cfg.output;
            if (key == "dir") o.dir = val;
            else if (key == "csv") o.csv = val;
            else known = false;
        }
        if (!known)
            throw usage_error(origin + ": unknown config key " + kc.where());
    }

    cfg.constrain.validate();
    if (cfg.dataset.n < 1) throw usage_error(origin + ": dataset.n must be >= 1");
    if (!(cfg.dataset.test_fraction >= 0 && cfg.dataset.test_fraction < 1))
        throw usage_error(origin + ": dataset.test_fraction must lie in [0, 1)");
    if (cfg.evaluate.eps < 0) throw usage_error(origin + ": evaluate.eps must be >= 0");
    if (cfg.evaluate.pgd_steps < 1)
        throw usage_error(origin + ": evaluate.pgd_steps must be >= 1");
    if (cfg.evaluate.restarts < 0)
        throw usage_error(origin + ": evaluate.restarts must be >= 0");
    if (cfg.evaluate.lower_pairs < 1)
        throw usage_error(origin + ": evaluate.lower_pairs must be >= 1");
    if (cfg.evaluate.samples < 0)
        throw usage_error(origin + ": evaluate.samples must be >= 0");
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

} // namespace liplock
