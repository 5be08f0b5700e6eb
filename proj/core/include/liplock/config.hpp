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
#pragma once

#include <cstdint>
#include <string>

#include "liplock/certify.hpp"
#include "liplock/constrain.hpp"
#include "liplock/models.hpp"
#include "liplock/train.hpp"

namespace liplock {

// [dataset] section. kind selects the source:
//   digits  procedural digit images (n, seed)
//   blobs   gaussian clusters (n, classes, dim, spread, seed)
//   idx     images/labels files; test_images/test_labels optional
// Without explicit test files the loaded set splits head/tail by
// test_fraction. Defaults give 10000 train / 2000 test digit images.
struct DatasetSpec {
    std::string kind = "digits";
    int n = 12000;
    int classes = 4;
    int dim = 32;
    double spread = 0.25;
    std::string images;
    std::string labels;
    std::string test_images;
    std::string test_labels;
    double test_fraction = 1.0 / 6.0;
    uint64_t seed = 7;
};

// [evaluate] section. pgd_step <= 0 means the attack picks 2.5*eps/steps.
// samples == 0 evaluates the whole test split.
struct EvalSpec {
    double eps = 1.58;
    int pgd_steps = 50;
    double pgd_step = 0.0;
    int restarts = 1;
    int lower_pairs = 12;
    int samples = 500;
    uint64_t seed = 9;
};

struct OutputSpec {
    std::string dir = "runs";
    std::string csv = "report.csv";
};

struct PipelineConfig {
    DatasetSpec dataset;
    ModelSpec model;
    uint64_t model_seed = 11;
    TrainConfig pretrain;
    AdaptConfig adapt;
    ConstrainConfig constrain;
    EvalSpec evaluate;
    OutputSpec output;

    // Rederives every per-stage seed from one master value, for --seed.
    void override_seed(uint64_t s);
};

// Strict sectioned key=value text. '#' starts a comment, blank lines are
// skipped, later assignments override earlier ones (presets included).
// Unknown sections or keys fail with their name and line number; so do
// malformed lines and unparseable values. Every key has the default spelled
// out in the structs above, so an empty string is a valid config.
PipelineConfig parse_config_text(const std::string& text,
                                 const std::string& origin = "config");
PipelineConfig load_config(const std::string& path);

} // namespace liplock
