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
#include "liplock/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "liplock/errors.hpp"
#include "liplock/rng.hpp"

namespace liplock {

namespace {

constexpr double kBlobRadius = 3.0;

// 5x7 glyphs for digits 0..9, one row per byte, low 5 bits used.
constexpr uint8_t kGlyphs[10][7] = {
    {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e}, // 0
    {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e}, // 1
    {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f}, // 2
    {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e}, // 3
    {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02}, // 4
    {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e}, // 5
    {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e}, // 6
    {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}, // 7
    {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e}, // 8
    {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c}, // 9
};

void put_be32(std::ofstream& out, uint32_t v) {
    const unsigned char b[4] = {
        static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_be32(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw data_error("truncated idx file: " + path);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) | (uint32_t(b[2]) << 8) |
           uint32_t(b[3]);
}

} // namespace

Dataset synth_blobs(uint64_t seed, int n, int classes, int dim, double spread) {
    if (n < 1 || classes < 2 || dim < 1)
        throw usage_error("synth_blobs: need n >= 1, classes >= 2, dim >= 1");
    if (classes > 2 * dim)
        throw usage_error("synth_blobs: at most 2*dim distinct centers");
    if (spread < 0) throw usage_error("synth_blobs: spread must be >= 0");

    Rng rng(seed);
    Dataset d;
    d.classes = classes;
    d.name = "blobs";
    d.inputs.reserve(n);
    d.labels.reserve(n);
    const double clip = 3.0 * spread;
    for (int i = 0; i < n; ++i) {
        const int k = i % classes;
        Tensor x({dim});
        const double sign = (k / dim) % 2 == 0 ? 1.0 : -1.0;
        x[k % dim] = static_cast<float>(sign * kBlobRadius);
        if (spread > 0) {
            Tensor noise = rng.gaussian({dim}, spread);
            double nn = 0;
            for (int j = 0; j < dim; ++j) nn += double(noise[j]) * noise[j];
            nn = std::sqrt(nn);
            const double s = nn > clip ? clip / nn : 1.0;
            for (int j = 0; j < dim; ++j) x[j] += static_cast<float>(s * noise[j]);
        }
        d.inputs.push_back(std::move(x));
        d.labels.push_back(k);
    }
    return d;
}

Dataset synth_digits(uint64_t seed, int n) {
    if (n < 1) throw usage_error("synth_digits: need n >= 1");
    Rng rng(seed);
    Dataset d;
    d.classes = 10;
    d.name = "digits";
    d.inputs.reserve(n);
    d.labels.reserve(n);
    for (int i = 0; i < n; ++i) {
        const int k = i % 10;
        Rng r = rng.split(uint64_t(i));
        // 5x7 glyph at 3x scale occupies 15x21; jitter keeps it inside 28x28.
        const int x0 = 6 + int(r.below(5)) - 2;
        const int y0 = 3 + int(r.below(5)) - 2;
        const double gain = 0.6 + 0.4 * r.uniform();
        Tensor img({1, 28, 28});
        for (int row = 0; row < 7; ++row)
            for (int col = 0; col < 5; ++col) {
                if (!((kGlyphs[k][row] >> (4 - col)) & 1)) continue;
                for (int dy = 0; dy < 3; ++dy)
                    for (int dx = 0; dx < 3; ++dx)
                        img.at(0, y0 + 3 * row + dy, x0 + 3 * col + dx) =
                            static_cast<float>(gain);
            }
        for (int64_t j = 0; j < img.numel(); ++j) {
            const double v = double(img[j]) + 0.08 * r.normal();
            img[j] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
        d.inputs.push_back(std::move(img));
        d.labels.push_back(k);
    }
    return d;
}

void write_idx(const Dataset& d, const std::string& images_path,
               const std::string& labels_path) {
    if (d.size() == 0) throw usage_error("write_idx: empty dataset");
    const auto& shape = d.inputs[0].shape();
    if (shape.size() != 3 || shape[0] != 1)
        throw usage_error("write_idx: inputs must be rank-3 single-channel images");
    const int h = shape[1], w = shape[2];

    std::ofstream imgs(images_path, std::ios::binary);
    if (!imgs) throw data_error("cannot open for writing: " + images_path);
    put_be32(imgs, 0x00000803u);
    put_be32(imgs, uint32_t(d.size()));
    put_be32(imgs, uint32_t(h));
    put_be32(imgs, uint32_t(w));
    std::vector<unsigned char> row(size_t(h) * w);
    for (const auto& img : d.inputs) {
        if (img.shape() != shape) throw usage_error("write_idx: mixed image shapes");
        for (size_t j = 0; j < row.size(); ++j) {
            const double v = std::clamp(double(img[int64_t(j)]), 0.0, 1.0);
            row[j] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
        imgs.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!imgs) throw data_error("write failed: " + images_path);

    std::ofstream labs(labels_path, std::ios::binary);
    if (!labs) throw data_error("cannot open for writing: " + labels_path);
    put_be32(labs, 0x00000801u);
    put_be32(labs, uint32_t(d.size()));
    for (int y : d.labels) {
        if (y < 0 || y > 255) throw usage_error("write_idx: label out of byte range");
        const unsigned char b = static_cast<unsigned char>(y);
        labs.write(reinterpret_cast<const char*>(&b), 1);
    }
    if (!labs) throw data_error("write failed: " + labels_path);
}

Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw data_error("cannot open idx file: " + images_path);
    if (get_be32(imgs, images_path) != 0x00000803u)
        throw data_error("bad magic in idx image file: " + images_path);
    const uint32_t n = get_be32(imgs, images_path);
    const uint32_t h = get_be32(imgs, images_path);
    const uint32_t w = get_be32(imgs, images_path);
    if (n == 0 || h == 0 || w == 0 || h > 4096 || w > 4096)
        throw data_error("bad idx image dimensions: " + images_path);

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw data_error("cannot open idx file: " + labels_path);
    if (get_be32(labs, labels_path) != 0x00000801u)
        throw data_error("bad magic in idx label file: " + labels_path);
    const uint32_t nl = get_be32(labs, labels_path);
    if (nl != n) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "count mismatch between idx files: %u images vs %u labels",
                      unsigned(n), unsigned(nl));
        throw data_error(buf);
    }

    Dataset d;
    d.name = "idx";
    d.inputs.reserve(n);
    d.labels.reserve(n);
    std::vector<unsigned char> row(size_t(h) * w);
    int max_label = 0;
    for (uint32_t i = 0; i < n; ++i) {
        if (!imgs.read(reinterpret_cast<char*>(row.data()), row.size()))
            throw data_error("truncated idx file: " + images_path);
        Tensor img({1, int(h), int(w)});
        for (size_t j = 0; j < row.size(); ++j)
            img[int64_t(j)] = static_cast<float>(row[j] / 255.0);
        unsigned char y;
        if (!labs.read(reinterpret_cast<char*>(&y), 1))
            throw data_error("truncated idx file: " + labels_path);
        d.inputs.push_back(std::move(img));
        d.labels.push_back(int(y));
        max_label = std::max(max_label, int(y));
    }
    d.classes = std::max(10, max_label + 1);
    return d;
}

void split_dataset(const Dataset& d, double test_fraction, Dataset& train, Dataset& test) {
    if (test_fraction < 0 || test_fraction >= 1)
        throw usage_error("split_dataset: test_fraction must be in [0, 1)");
    const int n_test = int(std::lround(test_fraction * d.size()));
    const int n_train = d.size() - n_test;
    if (n_train < 1) throw usage_error("split_dataset: empty training split");
    train = Dataset{{}, {}, d.classes, d.name};
    test = Dataset{{}, {}, d.classes, d.name};
    train.inputs.assign(d.inputs.begin(), d.inputs.begin() + n_train);
    train.labels.assign(d.labels.begin(), d.labels.begin() + n_train);
    test.inputs.assign(d.inputs.begin() + n_train, d.inputs.end());
    test.labels.assign(d.labels.begin() + n_train, d.labels.end());
}

} // namespace liplock
