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
#include <vector>

namespace liplock {

// Dense row-major float32 tensor of rank 1..4. Storage is 32-bit; every
// reduction over tensor data accumulates in 64-bit (see linalg.hpp).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape);
    Tensor(std::vector<int> shape, std::vector<float> data);

    static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }
    static Tensor full(std::vector<int> shape, float v);

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t numel() const { return static_cast<int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    float* data() { return data_.data(); }
    const float* data() const { return data_.data(); }

    float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
    float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

    // Rank-checked element access used by tests and slow paths.
    float& at(int i);
    float& at(int i, int j);
    float& at(int i, int j, int k);
    float& at(int i, int j, int k, int l);
    float at(int i) const { return const_cast<Tensor*>(this)->at(i); }
    float at(int i, int j) const { return const_cast<Tensor*>(this)->at(i, j); }
    float at(int i, int j, int k) const { return const_cast<Tensor*>(this)->at(i, j, k); }
    float at(int i, int j, int k, int l) const { return const_cast<Tensor*>(this)->at(i, j, k, l); }

    // Reshape to a shape with identical element count; data order unchanged.
    Tensor reshaped(std::vector<int> shape) const;

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
    bool all_finite() const;

    std::string shape_str() const;

private:
    std::vector<int> shape_;
    std::vector<float> data_;
};

// Copy of t[i, ...] with the leading axis removed (rank >= 2).
Tensor slice_first(const Tensor& t, int i);

// Elementwise helpers shared across modules. All throw on shape mismatch.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
void add_inplace(Tensor& a, const Tensor& b);
void axpy_inplace(Tensor& a, float s, const Tensor& b); // a += s * b

} // namespace liplock
