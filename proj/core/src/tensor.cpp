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
#include "liplock/tensor.hpp"

#include <cmath>
#include <sstream>

#include "liplock/errors.hpp"

namespace liplock {

namespace {

int64_t checked_numel(const std::vector<int>& shape) {
    if (shape.empty() || shape.size() > 4)
        throw data_error("tensor rank must be 1..4, got " + std::to_string(shape.size()));
    int64_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw data_error("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

} // namespace

Tensor::Tensor(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<size_t>(checked_numel(shape_)), 0.0f);
}

Tensor::Tensor(std::vector<int> shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (checked_numel(shape_) != static_cast<int64_t>(data_.size()))
        throw data_error("tensor data size does not match shape " + shape_str());
}

Tensor Tensor::full(std::vector<int> shape, float v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
}

float& Tensor::at(int i) {
    if (rank() != 1) throw data_error("rank-1 access on tensor of shape " + shape_str());
    return data_[static_cast<size_t>(i)];
}

float& Tensor::at(int i, int j) {
    if (rank() != 2) throw data_error("rank-2 access on tensor of shape " + shape_str());
    return data_[static_cast<size_t>(i) * shape_[1] + j];
}

float& Tensor::at(int i, int j, int k) {
    if (rank() != 3) throw data_error("rank-3 access on tensor of shape " + shape_str());
    return data_[(static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k];
}

float& Tensor::at(int i, int j, int k, int l) {
    if (rank() != 4) throw data_error("rank-4 access on tensor of shape " + shape_str());
    return data_[((static_cast<size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
}

Tensor Tensor::reshaped(std::vector<int> shape) const {
    if (checked_numel(shape) != numel())
        throw data_error("reshape changes element count");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
}

bool Tensor::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ")";
    return os.str();
}

Tensor slice_first(const Tensor& t, int i) {
    if (t.rank() < 2) throw data_error("slice_first: tensor rank must be >= 2");
    if (i < 0 || i >= t.dim(0)) throw data_error("slice_first: index out of range");
    std::vector<int> shape(t.shape().begin() + 1, t.shape().end());
    int64_t n = t.numel() / t.dim(0);
    std::vector<float> data(static_cast<size_t>(n));
    const float* src = t.data() + static_cast<int64_t>(i) * n;
    for (int64_t k = 0; k < n; ++k) data[static_cast<size_t>(k)] = src[k];
    return Tensor(std::move(shape), std::move(data));
}

namespace {
void check_same(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw data_error(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}
} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    check_same(a, b, "add");
    Tensor r = a;
    for (int64_t i = 0; i < r.numel(); ++i) r[i] += b[i];
    return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same(a, b, "sub");
    Tensor r = a;
    for (int64_t i = 0; i < r.numel(); ++i) r[i] -= b[i];
    return r;
}

Tensor scale(const Tensor& a, float s) {
    Tensor r = a;
    for (int64_t i = 0; i < r.numel(); ++i) r[i] *= s;
    return r;
}

void add_inplace(Tensor& a, const Tensor& b) {
    check_same(a, b, "add_inplace");
    for (int64_t i = 0; i < a.numel(); ++i) a[i] += b[i];
}

void axpy_inplace(Tensor& a, float s, const Tensor& b) {
    check_same(a, b, "axpy_inplace");
    for (int64_t i = 0; i < a.numel(); ++i) a[i] += s * b[i];
}

} // namespace liplock
