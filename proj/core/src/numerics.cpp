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
#include "liplock/numerics.hpp"

#include <cmath>
#include <mutex>
#include <vector>

#include "liplock/errors.hpp"
#include "liplock/rng.hpp"

namespace liplock {

double spectral_norm(const Tensor& m, int iters, double tol, uint64_t seed) {
    if (m.rank() != 2) throw data_error("spectral_norm: expected a matrix, got " + m.shape_str());
    if (m.dim(0) <= 0 || m.dim(1) <= 0) throw data_error("spectral_norm: degenerate shape");
    if (!m.all_finite()) throw numeric_error("spectral_norm: non-finite entries");
    const int r = m.dim(0), c = m.dim(1);
    const float* md = m.data();

    Rng rng(seed);
    std::vector<double> v(static_cast<size_t>(c));
    for (auto& x : v) x = rng.normal();

    std::vector<double> mv(static_cast<size_t>(r));
    double sigma = 0.0;
    for (int it = 0; it < iters; ++it) {
        // v <- normalize(v); mv = M v; v = M^T mv
        double n2 = 0.0;
        for (double x : v) n2 += x * x;
        if (n2 == 0.0) return 0.0; // only possible for the zero matrix
        double inv = 1.0 / std::sqrt(n2);
        for (auto& x : v) x *= inv;

        for (int i = 0; i < r; ++i) {
            const float* row = md + static_cast<size_t>(i) * c;
            double acc = 0.0;
            for (int j = 0; j < c; ++j) acc += static_cast<double>(row[j]) * v[static_cast<size_t>(j)];
            mv[static_cast<size_t>(i)] = acc;
        }
        double s2 = 0.0;
        for (double x : mv) s2 += x * x;
        double next = std::sqrt(s2); // = sqrt(v^T M^T M v), v unit: <= sigma_max

        std::vector<double> vt(static_cast<size_t>(c), 0.0);
        for (int i = 0; i < r; ++i) {
            const float* row = md + static_cast<size_t>(i) * c;
            double mi = mv[static_cast<size_t>(i)];
            for (int j = 0; j < c; ++j) vt[static_cast<size_t>(j)] += static_cast<double>(row[j]) * mi;
        }
        v.swap(vt);

        if (it > 0 && std::fabs(next - sigma) <= tol * std::max(next, 1e-300)) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return sigma;
}

double soft_threshold(double v, double beta) {
    if (beta < 0.0) throw usage_error("soft_threshold: beta must be nonnegative");
    double mag = std::fabs(v) - beta;
    if (mag <= 0.0) return 0.0;
    return v < 0.0 ? -mag : mag;
}

Tensor soft_threshold(const Tensor& m, double beta) {
    if (beta < 0.0) throw usage_error("soft_threshold: beta must be nonnegative");
    Tensor r = m;
    for (int64_t i = 0; i < r.numel(); ++i)
        r[i] = static_cast<float>(soft_threshold(static_cast<double>(r[i]), beta));
    return r;
}

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

double gelu_derivative(double x) {
    return x * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI)
         + 0.5 * std::erf(x * M_SQRT1_2) + 0.5;
}

namespace {
std::once_flag gelu_once;
double gelu_max_slope = 0.0;
double gelu_argmax = 0.0;

void gelu_grid_search() {
    const double step = 1e-4;
    double best = 0.0, at = 0.0;
    // |f'| over [-6, 6]; the slope peaks at sqrt(2) and the grid brackets it.
    for (long i = -60000; i <= 60000; ++i) {
        double x = static_cast<double>(i) * step;
        double s = std::fabs(gelu_derivative(x));
        if (s > best) {
            best = s;
            at = x;
        }
    }
    gelu_max_slope = best;
    gelu_argmax = at;
}
} // namespace

double gelu_lipschitz_constant() {
    std::call_once(gelu_once, gelu_grid_search);
    return gelu_max_slope;
}

double gelu_lipschitz_argmax() {
    std::call_once(gelu_once, gelu_grid_search);
    return gelu_argmax;
}

Tensor finite_difference_gradient(const std::function<double(const Tensor&)>& fn,
                                  const Tensor& w, double h) {
    if (h <= 0.0) throw usage_error("finite_difference_gradient: h must be positive");
    Tensor g(w.shape());
    Tensor probe = w;
    for (int64_t i = 0; i < w.numel(); ++i) {
        float orig = probe[i];
        float hi = static_cast<float>(static_cast<double>(orig) + h);
        float lo = static_cast<float>(static_cast<double>(orig) - h);
        probe[i] = hi;
        double fhi = fn(probe);
        probe[i] = lo;
        double flo = fn(probe);
        probe[i] = orig;
        if (!std::isfinite(fhi) || !std::isfinite(flo))
            throw numeric_error("finite_difference_gradient: fn returned non-finite value");
        double denom = static_cast<double>(hi) - static_cast<double>(lo);
        g[i] = static_cast<float>((fhi - flo) / denom);
    }
    return g;
}

} // namespace liplock
