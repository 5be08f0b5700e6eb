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

// Reference implementations the test suite trusts. Each one is built on a
// different method than the library code it checks: exact SVD instead of
// power iteration, finite differences instead of analytic gradients, and
// slow projected descent instead of anchored subgradient cuts.

#include "liplock/constrain.hpp"
#include "liplock/linalg.hpp"
#include "liplock/tensor.hpp"

namespace liplock::testing {

// Exact largest singular value via Eigen's JacobiSVD.
double svd_spectral_norm(const Mat& m);
double svd_spectral_norm(const Tensor& t); // rank >= 2; leading dim x rest

// Central finite differences of constraint_value in every entry of W.
Mat fd_constraint_gradient(const Mat& W, const LayerTrace& trace, int j, double eta,
                           bool identity_form = false, double h = 1e-6);

// Brute-force projection of W onto the accuracy set: tiny pulls toward W
// interleaved with feasibility restoration through first-order cuts, with
// a decreasing pull schedule. Slow and simple; accurate to ~1e-5 on the
// 3x3 instances it is used for. feas_tol is the restoration target.
Mat descent_project(const Mat& W, const LayerTrace& trace, double eta,
                    double feas_tol = 1e-12);

// Closed-form projection for identity traces with eta = 0: each row of W
// projects onto the affine set {w : X w = y} via the pseudoinverse.
Mat exact_identity_project(const Mat& W, const LayerTrace& trace);

// Max constraint_value over all batches.
double max_constraint(const Mat& W, const LayerTrace& trace, double eta);

} // namespace liplock::testing
