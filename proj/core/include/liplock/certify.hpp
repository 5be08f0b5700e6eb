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
#include <string>
#include <vector>

#include "liplock/layers.hpp"
#include "liplock/rng.hpp"

namespace liplock {

// Robustness evaluation: margin certificates from the Lipschitz bound, an
// l2 PGD attack as the empirical counterpart, and difference-quotient lower
// bounds that sandwich the analytic bound from below.

struct CertReport {
    std::string model;
    double epsilon = 0.0;
    double clean_acc = 0.0; // correct on the raw input
    double pgd_acc = 0.0;   // correct on the raw input and on its attack
    double cert_acc = 0.0;  // correct with margin > sqrt(2) * eps * L
    double lipschitz_upper = 0.0;
    double lipschitz_lower = 0.0; // empirical difference quotient
    int64_t flops = 0;            // forward cost of one sample
    int samples = 0;
};

struct AttackConfig {
    int steps = 50;
    double step_size = 0.0; // <= 0 selects 2.5 * eps / steps
    int restarts = 1;       // independent runs; the first starts at x
    int lower_pairs = 12;   // sampled pairs for the empirical lower bound
    uint64_t seed = 0xa77ac;
};

// Argmax class of the logits; the network must end in a vector head.
int predict(const Network& net, const Tensor& x);

double clean_accuracy(const Network& net, const std::vector<Tensor>& inputs,
                      const std::vector<int>& labels);

// True iff the sample is correctly classified and its logit margin exceeds
// sqrt(2) * eps * L. Certified samples cannot be flipped by any perturbation
// of l2 norm <= eps. The four-argument form computes the network bound
// itself and so requires it to be finite; the five-argument form takes a
// precomputed bound and treats an infinite bound as "never certified".
bool certify_sample(const Network& net, const Tensor& x, int label, double eps);
bool certify_sample(const Network& net, const Tensor& x, int label, double eps,
                    double lipschitz);

// l2 PGD ascent on the cross-entropy: each step moves step_size along the
// normalized input gradient, then re-projects onto the eps-ball around x.
// Returns the iterate with the highest loss seen (including the start
// point). A zero gradient triggers a seeded random restart, at most three
// times per run.
Tensor pgd_attack(const Network& net, const Tensor& x, int label, double eps, int steps,
                  double step_size, uint64_t seed = 0xa77ac);

// Max difference quotient |f(x+z) - f(x)| / |z| over sampled base points
// and directions at scales 1e-3..1, each refined by a few rounds of power
// iteration on J^T J (via backward passes and finite-difference forward
// products). Only true quotients are reported, so the result is a valid
// lower bound on the Lipschitz constant by definition.
double empirical_lipschitz_lower_bound(const Network& net, int n_pairs,
                                       const std::function<Tensor(Rng&)>& sampler,
                                       uint64_t seed = 0x10e7);

// Full pass over a labeled dataset: clean/PGD/certified accuracy, bounds
// and FLOPs. pgd_acc counts samples that are clean-correct and stay correct
// on their attack point, so cert <= pgd <= clean holds structurally; a
// certified-but-attacked sample raises logic_error (soundness violation).
// Networks without a finite bound get lipschitz_upper = infinity and zero
// certified accuracy.
CertReport evaluate(const Network& net, const std::vector<Tensor>& inputs,
                    const std::vector<int>& labels, double eps,
                    const AttackConfig& attack = {});

enum class FlopPhase { forward, train_step, constrain_epoch };

// Analytic flop counts, multiply-accumulate counted as 2.
//   linear (N out, M in):        2 N M
//   conv:                        2 oc oh ow (ic kh kw)
//   patch embed:                 2 tokens embed (pvol + 1)
//   activation:                  numel
//   l2 attention, n tokens:      2 n H d D + 2 n H d d + 2 n D D   (maps)
//                                + 3 H n^2 d + 5 H n^2 + 2 H n^2 d (scores,
//                                softmax, mixing)
//   dp attention:                as above with three input projections and
//                                2 H n^2 d score products
//   residual:                    body + numel of the skip add
// train_step is 3x forward (backward pass heuristic); constrain_epoch is
// 6 N M per constrainable matrix, the cost of one constraint evaluation,
// one gradient and one prox pass per trace row.
int64_t flop_count(const Network& net, FlopPhase phase);

} // namespace liplock
