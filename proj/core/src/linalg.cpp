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
#include "liplock/linalg.hpp"

#include <cmath>

#include "liplock/errors.hpp"

namespace liplock {

namespace {
void need_rank2(const Tensor& m, const char* who) {
    if (m.rank() != 2) throw data_error(std::string(who) + ": expected a matrix, got " + m.shape_str());
}
} // namespace

Tensor matvec(const Tensor& m, const Tensor& x) {
    need_rank2(m, "matvec");
    if (x.rank() != 1 || x.dim(0) != m.dim(1))
        throw data_error("matvec: shape mismatch " + m.shape_str() + " * " + x.shape_str());
    int r = m.dim(0), c = m.dim(1);
    Tensor y({r});
    const float* md = m.data();
    for (int i = 0; i < r; ++i) {
        double acc = 0.0;
        const float* row = md + static_cast<size_t>(i) * c;
        for (int j = 0; j < c; ++j) acc += static_cast<double>(row[j]) * x[j];
        y[i] = static_cast<float>(acc);
    }
    return y;
}

Tensor matvec_t(const Tensor& m, const Tensor& x) {
    need_rank2(m, "matvec_t");
    if (x.rank() != 1 || x.dim(0) != m.dim(0))
        throw data_error("matvec_t: shape mismatch " + m.shape_str() + "^T * " + x.shape_str());
    int r = m.dim(0), c = m.dim(1);
    std::vector<double> acc(static_cast<size_t>(c), 0.0);
    const float* md = m.data();
    for (int i = 0; i < r; ++i) {
        double xi = x[i];
        const float* row = md + static_cast<size_t>(i) * c;
        for (int j = 0; j < c; ++j) acc[static_cast<size_t>(j)] += static_cast<double>(row[j]) * xi;
    }
    Tensor y({c});
    for (int j = 0; j < c; ++j) y[j] = static_cast<float>(acc[static_cast<size_t>(j)]);
    return y;
}

Tensor matmul(const Tensor& m, const Tensor& n) {
    need_rank2(m, "matmul");
    need_rank2(n, "matmul");
    if (m.dim(1) != n.dim(0))
        throw data_error("matmul: shape mismatch " + m.shape_str() + " * " + n.shape_str());
    int a = m.dim(0), b = m.dim(1), c = n.dim(1);
    Tensor out({a, c});
    std::vector<double> acc(static_cast<size_t>(c));
    for (int i = 0; i < a; ++i) {
        for (int j = 0; j < c; ++j) acc[static_cast<size_t>(j)] = 0.0;
        const float* mrow = m.data() + static_cast<size_t>(i) * b;
        for (int k = 0; k < b; ++k) {
            double mik = mrow[k];
            const float* nrow = n.data() + static_cast<size_t>(k) * c;
            for (int j = 0; j < c; ++j) acc[static_cast<size_t>(j)] += mik * nrow[j];
        }
        float* orow = out.data() + static_cast<size_t>(i) * c;
        for (int j = 0; j < c; ++j) orow[j] = static_cast<float>(acc[static_cast<size_t>(j)]);
    }
    return out;
}

Tensor map_rows(const Tensor& m, const Tensor& x) {
    need_rank2(m, "map_rows");
    need_rank2(x, "map_rows");
    if (x.dim(1) != m.dim(1))
        throw data_error("map_rows: row width " + x.shape_str() + " does not match " + m.shape_str());
    return matmul(x, transpose(m));
}

Tensor transpose(const Tensor& m) {
    need_rank2(m, "transpose");
    int r = m.dim(0), c = m.dim(1);
    Tensor t({c, r});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) t[static_cast<int64_t>(j) * r + i] = m[static_cast<int64_t>(i) * c + j];
    return t;
}

double dot(const Tensor& a, const Tensor& b) {
    if (a.numel() != b.numel()) throw data_error("dot: element count mismatch");
    double acc = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) acc += static_cast<double>(a[i]) * b[i];
    return acc;
}

double frobenius_norm(const Tensor& a) {
    double acc = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) acc += static_cast<double>(a[i]) * a[i];
    return std::sqrt(acc);
}

double l1_norm(const Tensor& a) {
    double acc = 0.0;
    for (int64_t i = 0; i < a.numel(); ++i) acc += std::fabs(static_cast<double>(a[i]));
    return acc;
}

double l2_norm(const Tensor& a) { return frobenius_norm(a); }

Mat to_mat(const Tensor& t) {
    if (t.rank() != 2) throw data_error("to_mat: expected a matrix, got " + t.shape_str());
    Mat m(t.dim(0), t.dim(1));
    for (size_t i = 0; i < m.size(); ++i) m.a[i] = static_cast<double>(t.data()[i]);
    return m;
}

Tensor to_tensor(const Mat& m) {
    Tensor t({m.r, m.c});
    for (size_t i = 0; i < m.size(); ++i) t.data()[i] = static_cast<float>(m.a[i]);
    return t;
}

double dot(const Mat& x, const Mat& y) {
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) acc += x.a[i] * y.a[i];
    return acc;
}

double frobenius_norm(const Mat& x) { return std::sqrt(dot(x, x)); }

double l1_norm(const Mat& x) {
    double acc = 0.0;
    for (double v : x.a) acc += std::fabs(v);
    return acc;
}

void axpy(Mat& y, double s, const Mat& x) {
    for (size_t i = 0; i < y.size(); ++i) y.a[i] += s * x.a[i];
}

Mat sub(const Mat& x, const Mat& y) {
    Mat r(x.r, x.c);
    for (size_t i = 0; i < r.size(); ++i) r.a[i] = x.a[i] - y.a[i];
    return r;
}

} // namespace liplock
