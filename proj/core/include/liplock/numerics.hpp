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
#include <functional>

#include "liplock/tensor.hpp"

namespace liplock {

// Largest singular value estimate via power iteration on M^T M. The start
// vector is a seeded Gaussian (renormalized every step), so the result is
// bit-deterministic for a fixed seed. Stops early when the Rayleigh
// quotient changes by less than tol relative. The estimate approaches
// sigma_max from below; with a nonzero gap between the top two singular
// values it is within (1 - tol) * sigma_max.
double spectral_norm(const Tensor& m, int iters = 200, double tol = 1e-10,
                     uint64_t seed = 0x5eed);

// Elementwise shrink toward zero: sign(m) * max(|m| - beta, 0). This is the
// proximity operator of beta * l1; composition law
// soft_threshold(soft_threshold(m, a), b) == soft_threshold(m, a + b).
Tensor soft_threshold(const Tensor& m, double beta);
double soft_threshold(double v, double beta);

// Gaussian-error-function GELU and its exact derivative.
double gelu(double x);
double gelu_derivative(double x);

// Maximum slope of GELU, located by dense grid search over [-6, 6] with
// step 1e-4 and cached after the first call. The maximizer is sqrt(2).
double gelu_lipschitz_constant();
// Grid argmax, exposed for the location check.
double gelu_lipschitz_argmax();

// Central-difference gradient of a scalar function of a matrix. The
// divisor uses the exactly-representable difference fl(w+h) - fl(w-h), so
// float32 storage does not bias the estimate. Throws if fn returns a
// non-finite value.
Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& fn,
                                  const Tensor& w, double h = 1e-3);

} // namespace liplock
