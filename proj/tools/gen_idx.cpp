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

// Writes the procedural digit corpus as IDX image/label files so the file
// loading path can be exercised end to end without any external download.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "liplock/dataset.hpp"
#include "liplock/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"generate a digit-image corpus in idx format"};
    int n = 12000;
    uint64_t seed = 7;
    std::string images = "digits-images.idx";
    std::string labels = "digits-labels.idx";
    app.add_option("-n,--count", n, "sample count");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--images", images, "output image file");
    app.add_option("--labels", labels, "output label file");
    CLI11_PARSE(app, argc, argv);

    try {
        const liplock::Dataset d = liplock::synth_digits(seed, n);
        liplock::write_idx(d, images, labels);
        std::printf("wrote %d samples to %s / %s\n", d.size(), images.c_str(),
                    labels.c_str());
    } catch (const liplock::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.kind() == liplock::ErrorKind::usage ? 1 : 2;
    }
    return 0;
}
