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

#include <vector>

#include "liplock/tensor.hpp"

namespace liplock {

// Rank-2 Tensor helpers. Inputs are float32; every dot product accumulates
// in double before rounding back to storage precision.

// (r x c) * (c) -> (r)
Tensor matvec(const Tensor& m, const Tensor& x);
// (r x c)^T * (r) -> (c)
Tensor matvec_t(const Tensor& m, const Tensor& x);
// (a x b) * (b x c) -> (a x c)
Tensor matmul(const Tensor& m, const Tensor& n);
// rows of x (t x c) mapped through m (r x c): result (t x r)
Tensor map_rows(const Tensor& m, const Tensor& x);
Tensor transpose(const Tensor& m);

double dot(const Tensor& a, const Tensor& b);
double frobenius_norm(const Tensor& a);
double l1_norm(const Tensor& a);
double l2_norm(const Tensor& a); // alias of frobenius_norm for vectors

// Dense row-major double matrix used internally by the constraint solver,
// where branch coefficients need full precision.
struct Mat {
    int r = 0, c = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int rows, int cols) : r(rows), c(cols), a(static_cast<size_t>(rows) * cols, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * c + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * c + j]; }
    size_t size() const { return a.size(); }
};

Mat to_mat(const Tensor& t);          // rank-2 tensor -> double matrix
Tensor to_tensor(const Mat& m);       // double matrix -> rank-2 float tensor
double dot(const Mat& x, const Mat& y);
double frobenius_norm(const Mat& x);
double l1_norm(const Mat& x);
void axpy(Mat& y, double s, const Mat& x); // y += s * x
Mat sub(const Mat& x, const Mat& y);

} // namespace liplock
