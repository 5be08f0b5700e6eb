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

#include "liplock/layers.hpp"
#include "liplock/linalg.hpp"

namespace liplock {

// Weight constraining: shrink each weight matrix toward small norms while an
// accuracy set keeps its outputs close to the pretrained ones. The solver is
// Douglas-Rachford splitting between the l1 proximity operator and an
// approximate projection onto the accuracy set; the projection itself is an
// anchored cyclic subgradient scheme over per-batch constraint cuts
// (Haugazeau's three-branch update).
//
// All constraint arithmetic runs in double (Mat): the branch coefficients
// divide nearly-cancelling quantities and float32 noise flips branches.

// Activation following the traced map. Only these two admit closed-form
// projections onto the activation subdifferential.
enum class TraceAct { identity, relu };

// Traced input/output rows for one constrainable weight matrix.
//
// Target semantics: for identity traces, Y is the pure matrix response
// X*W^T recomputed at capture time (bias and any positional offsets
// excluded), so the anchor satisfies every constraint with equality. For
// relu traces, Y is the recorded post-activation output and `bias` holds
// the frozen additive term of the pre-activation.
struct LayerTrace {
    std::string path; // parameter path of the constrained matrix ("L0.W")
    int head = -1;    // slice of a rank-3 parameter (per-head value), else -1
    std::string kind; // linear | conv | patch | attn_qk | attn_v | attn_o
    TraceAct act = TraceAct::identity;
    Mat X;                    // (K, M) unit inputs, one sample per row
    Mat Y;                    // (K, N) targets
    std::vector<double> bias; // (N) or empty
    int batches = 0;          // J
    int batch = 0;            // T; K == J*T exactly
    int dropped = 0;          // trailing samples discarded to make K divisible
};

struct ConstrainConfig {
    double beta = 0.1;   // l1 prox magnitude; >= 0 (0 turns the prox off)
    double eta = 1e-2;   // per-sample accuracy tolerance; >= 0
    double lambda = 1.2; // relaxation, in ]0, 2[
    int dr_epochs = 5;   // outer Douglas-Rachford iterations
    int proj_epochs = 2; // sweeps over the J batches per projection call
    double proj_tol = 0.0; // constraint slack; <= 0 selects 1e-6*T*max(eta,1)
    double dr_tol = 1e-7;  // relative outer stop on consecutive iterates
    int batch = 128;       // trace mini-batch size T
    int trace_cap = 2048;  // max rows kept per unit trace (stride-subsampled)
    int threads = 1;       // concurrent layer tasks; 0 = hardware concurrency
    bool identity_form_gradient = false; // plain-residual gradient everywhere
    int finetune_epochs = 0;
    double finetune_step = 1e-2;
    int finetune_batch = 64;
    uint64_t seed = 0xc0de;

    void validate() const; // throws usage_error on out-of-range fields
    double effective_proj_tol(int T) const;
};

// Projection of z onto the subdifferential (at y) of the function whose
// proximity operator the activation realizes. identity: the zero vector.
// relu: componentwise 0 where y > 0 and min(z, 0) where y == 0.
// Throws data_error("inconsistent trace") if a relu output is negative.
std::vector<double> subdiff_project(TraceAct kind, const std::vector<double>& y,
                                    const std::vector<double>& z);

// ||z - subdiff_project(kind, y, z)||^2. Zero exactly at a consistent trace.
double subdiff_distance_sq(TraceAct kind, const std::vector<double>& y,
                           const std::vector<double>& z);

// Accuracy constraint of batch j (0-based): sum over the batch of the
// squared subdifferential distance of W*x (+ bias) against the target row,
// minus T*eta. W is feasible for the batch iff <= 0.
double constraint_value(const Mat& W, const LayerTrace& trace, int j, double eta);

// Gradient of constraint_value in W: 2 * sum_t r_t x_t^T with residual
// r = z - subdiff_project(kind, y, z). With identity_form the projection
// term is dropped (r = z), which only differs for relu traces.
Mat constraint_gradient(const Mat& W, const LayerTrace& trace, int j,
                        bool identity_form = false);

struct ProjectionResult {
    Mat W;
    double max_residual = 0.0; // max_j constraint_value at the returned W
    bool feasible = false;     // max_residual <= tolerance
    int sweeps = 0;            // full passes over the batches
};

// Approximate projection of W onto the intersection of all batch constraint
// sets, anchored at the input point. Each violated batch contributes a
// halfspace cut and a step d = -(c/||g||^2) g; the anchored three-branch
// update keeps the iterate the nearest point of the anchor compatible with
// the cuts seen so far. Stops when every batch is within tolerance or after
// proj_epochs sweeps, returning the best iterate seen with its residual.
// Throws numeric_error("infeasible flat constraint") when a violated batch
// has a zero gradient.
ProjectionResult project_accuracy_set(const Mat& W, const LayerTrace& trace,
                                      double eta, const ConstrainConfig& cfg);

struct DrStep {
    double l1 = 0.0;        // ||W_n||_1 of the prox iterate
    double residual = 0.0;  // max batch constraint at W_n
    bool feasible = false;
};

struct LayerResult {
    Mat W;
    double l1_before = 0.0, l1_after = 0.0;
    double residual = 0.0;
    bool feasible = false;
    int iterations = 0;         // outer iterations executed
    std::vector<DrStep> steps;  // one record per outer iteration
};

// Douglas-Rachford loop for one weight matrix:
//   W_n = soft_threshold(What_n, beta)
//   Wt_n = project_accuracy_set(2 W_n - What_n)
//   What_{n+1} = What_n + lambda (Wt_n - W_n)
// starting at What_0 = W0, for dr_epochs iterations or until the prox
// iterates settle (dr_tol, relative). The final iterate is projected once
// more so the returned matrix is feasible within tolerance.
LayerResult constrain_layer(const Mat& W0, const LayerTrace& trace,
                            const ConstrainConfig& cfg);

// Capture one trace per constrainable weight matrix of the network, in
// visit order: linear and conv kernels (relu targets when a relu follows,
// identity targets otherwise), patch embeddings, and the three projection
// matrices of each l2 attention layer (stacked query/key, per-head value,
// output; identity targets). Dot-product attention has no finite bound to
// lower and is skipped. Rows beyond cfg.trace_cap are stride-subsampled;
// the trailing remainder modulo cfg.batch is dropped and recorded.
std::vector<LayerTrace> trace_layers(const Network& net,
                                     const std::vector<Tensor>& inputs,
                                     const ConstrainConfig& cfg);

struct UnitReport {
    std::string path, kind;
    int rows = 0, batches = 0;
    double sigma_before = 0.0, sigma_after = 0.0; // spectral norms
    double l1_before = 0.0, l1_after = 0.0;
    double residual = 0.0;
    bool feasible = false;
    int iterations = 0;
};

struct ConstrainReport {
    std::vector<UnitReport> units;
    double bound_before = 0.0, bound_after = 0.0; // network Lipschitz product
    double bound_after_finetune = 0.0;            // 0 when not fine-tuned
    std::vector<double> finetune_loss;            // mean loss per epoch
    bool finetuned = false;
};

// Constrain every eligible weight matrix of the network from its trace.
// Layer tasks are independent and run on cfg.threads workers; output is
// bit-identical to serial execution. When cfg.finetune_epochs > 0 the
// reassembled network is fine-tuned on (inputs, labels) afterwards. A task
// failure is rethrown with the unit path prepended.
Network constrain_network(const Network& net, const std::vector<Tensor>& inputs,
                          const std::vector<int>& labels, const ConstrainConfig& cfg,
                          ConstrainReport* report = nullptr);

struct FineTuneResult {
    Network net;
    double bound_before = 0.0, bound_after = 0.0;
    std::vector<double> epoch_loss;
    bool aborted = false; // loss went non-finite; weights are the last good ones
};

// Plain cross-entropy gradient descent on all weights. No constraint is
// enforced during fine-tuning; the Lipschitz bound before and after is
// reported instead so the drift is visible.
FineTuneResult fine_tune(const Network& net, const std::vector<Tensor>& inputs,
                         const std::vector<int>& labels, int epochs, double step,
                         int batch, uint64_t seed);

} // namespace liplock
