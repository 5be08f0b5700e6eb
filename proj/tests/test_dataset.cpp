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
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "liplock/dataset.hpp"
#include "liplock/errors.hpp"
#include "liplock/linalg.hpp"

using namespace liplock;

namespace {

std::filesystem::path tmp(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

double dist(const Tensor& a, const Tensor& b) { return l2_norm(sub(a, b)); }

} // namespace

TEST_SUITE("dataset") {

TEST_CASE("blobs: balanced cycling labels and clipped noise radius") {
    const double spread = 0.25;
    const Dataset d = synth_blobs(7, 40, 4, 8, spread);
    CHECK(d.size() == 40);
    CHECK(d.classes == 4);
    REQUIRE(d.inputs.size() == 40);
    for (int i = 0; i < 40; ++i) {
        CHECK(d.labels[size_t(i)] == i % 4);
        CHECK(d.inputs[size_t(i)].shape() == std::vector<int>{8});
    }

    // Exact centers at spread zero expose the geometry.
    const Dataset centers = synth_blobs(7, 4, 4, 8, 0.0);
    for (int i = 0; i < 40; ++i) {
        const int k = d.labels[size_t(i)];
        CHECK(dist(d.inputs[size_t(i)], centers.inputs[size_t(k)]) <= 3.0 * spread + 1e-6);
    }
    // Distinct centers sit 3 * sqrt(2) apart; noise balls cannot overlap.
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b)
            CHECK(dist(centers.inputs[size_t(a)], centers.inputs[size_t(b)]) >=
                  3.0 * std::sqrt(2.0) - 1e-6);

    // Same seed, same data; different seed, different noise.
    const Dataset e = synth_blobs(7, 40, 4, 8, spread);
    CHECK(dist(d.inputs[5], e.inputs[5]) == 0.0);
    const Dataset f = synth_blobs(8, 40, 4, 8, spread);
    CHECK(dist(d.inputs[5], f.inputs[5]) > 0.0);

    CHECK_THROWS_AS(synth_blobs(7, 10, 17, 8, 0.1), Error); // classes > 2*dim
    CHECK_THROWS_AS(synth_blobs(7, 0, 2, 4, 0.1), Error);
}

TEST_CASE("digits: 28x28 normalized images with cycling labels") {
    const Dataset d = synth_digits(3, 30);
    CHECK(d.size() == 30);
    CHECK(d.classes == 10);
    for (int i = 0; i < 30; ++i) {
        const Tensor& x = d.inputs[size_t(i)];
        CHECK(x.shape() == std::vector<int>{1, 28, 28});
        CHECK(d.labels[size_t(i)] == i % 10);
        float lo = 0.0f, hi = 0.0f;
        for (int64_t k = 0; k < x.numel(); ++k) {
            lo = std::min(lo, x[k]);
            hi = std::max(hi, x[k]);
        }
        CHECK(lo >= 0.0f);
        CHECK(hi <= 1.0f);
        CHECK(hi > 0.3f); // a glyph is actually drawn
    }

    // Same class, different samples: jitter moves pixels around.
    CHECK(dist(d.inputs[0], d.inputs[10]) > 0.0);
    // Determinism under the seed.
    const Dataset e = synth_digits(3, 30);
    CHECK(dist(d.inputs[17], e.inputs[17]) == 0.0);
}

TEST_CASE("idx files round-trip through write and load") {
    const Dataset d = synth_digits(11, 20);
    const auto ip = tmp("liplock-test-images.idx");
    const auto lp = tmp("liplock-test-labels.idx");
    write_idx(d, ip.string(), lp.string());

    const Dataset back = load_mnist_idx(ip.string(), lp.string());
    CHECK(back.size() == 20);
    CHECK(back.classes == 10);
    CHECK(back.labels == d.labels);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        REQUIRE(back.inputs[size_t(i)].shape() == d.inputs[size_t(i)].shape());
        for (int64_t k = 0; k < back.inputs[size_t(i)].numel(); ++k)
            worst = std::max(worst, std::fabs(double(back.inputs[size_t(i)][k]) -
                                              double(d.inputs[size_t(i)][k])));
    }
    CHECK(worst <= 0.5 / 255 + 1e-9); // one quantization step

    std::filesystem::remove(ip);
    std::filesystem::remove(lp);
}

TEST_CASE("idx loader tells its failure modes apart") {
    const Dataset d = synth_digits(13, 6);
    const auto ip = tmp("liplock-bad-images.idx");
    const auto lp = tmp("liplock-bad-labels.idx");
    write_idx(d, ip.string(), lp.string());

    auto message_of = [&](const std::string& a, const std::string& b) {
        try {
            load_mnist_idx(a, b);
        } catch (const Error& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };

    // Bad magic in the image file.
    {
        std::fstream f(ip, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.put(char(0x12));
    }
    CHECK(message_of(ip.string(), lp.string()).find("bad magic") != std::string::npos);

    // Truncated image payload.
    write_idx(d, ip.string(), lp.string());
    std::filesystem::resize_file(ip, std::filesystem::file_size(ip) - 100);
    CHECK(message_of(ip.string(), lp.string()).find("truncated") != std::string::npos);

    // Image/label count mismatch.
    write_idx(d, ip.string(), lp.string());
    const Dataset fewer = synth_digits(13, 4);
    const auto lp2 = tmp("liplock-bad-labels2.idx");
    write_idx(fewer, tmp("liplock-bad-images2.idx").string(), lp2.string());
    CHECK(message_of(ip.string(), lp2.string()).find("count mismatch") != std::string::npos);

    std::filesystem::remove(ip);
    std::filesystem::remove(lp);
    std::filesystem::remove(lp2);
    std::filesystem::remove(tmp("liplock-bad-images2.idx"));
}

TEST_CASE("split keeps both halves balanced thanks to cycling labels") {
    const Dataset d = synth_blobs(21, 60, 3, 4, 0.2);
    Dataset train, test;
    split_dataset(d, 1.0 / 6, train, test);
    CHECK(train.size() == 50);
    CHECK(test.size() == 10);
    CHECK(train.classes == 3);
    CHECK(test.classes == 3);

    auto counts = [](const Dataset& s) {
        std::vector<int> c(size_t(s.classes), 0);
        for (int l : s.labels) ++c[size_t(l)];
        return c;
    };
    for (int c : counts(train)) CHECK(c >= 16);
    for (int c : counts(test)) CHECK(c >= 3);

    // Head/tail: the test half is the tail, order preserved.
    CHECK(dist(test.inputs[0], d.inputs[50]) == 0.0);
    CHECK(test.labels[0] == d.labels[50]);

    Dataset all, none;
    split_dataset(d, 0.0, all, none); // zero test fraction is legal
    CHECK(all.size() == 60);
    CHECK(none.size() == 0);
    CHECK_THROWS_AS(split_dataset(d, 1.0, train, test), Error);
    CHECK_THROWS_AS(split_dataset(d, -0.1, train, test), Error);
}

} // TEST_SUITE
