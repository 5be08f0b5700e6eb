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

// Microbenchmarks for the hot paths: spectral norms (bound evaluation),
// the l1 prox, attention forwards and one projection sweep.

#include <benchmark/benchmark.h>

#include "liplock/constrain.hpp"
#include "liplock/layers.hpp"
#include "liplock/lipschitz.hpp"
#include "liplock/models.hpp"
#include "liplock/numerics.hpp"
#include "liplock/rng.hpp"

using namespace liplock;

namespace {

Mat gaussian_mat(Rng& r, int rows, int cols) {
    Mat m(rows, cols);
    for (size_t i = 0; i < m.a.size(); ++i) m.a[i] = r.normal();
    return m;
}

void bm_spectral_norm(benchmark::State& state) {
    const int n = int(state.range(0));
    Rng r(1);
    const Tensor m = r.gaussian({n, n});
    for (auto _ : state) benchmark::DoNotOptimize(spectral_norm(m, 200, 1e-10));
    state.SetComplexityN(n);
}

void bm_soft_threshold(benchmark::State& state) {
    const int n = int(state.range(0));
    Rng r(2);
    const Tensor m = r.gaussian({n, n});
    for (auto _ : state) benchmark::DoNotOptimize(soft_threshold(m, 0.05));
    state.SetBytesProcessed(int64_t(state.iterations()) * n * n * int64_t(sizeof(float)));
}

void bm_attention_forward(benchmark::State& state) {
    ModelSpec vs;
    vs.patch = 7;
    vs.depth = int(state.range(0));
    vs.embed = 64;
    vs.heads = 4;
    vs.mlp_ratio = 2;
    const Network net = build_vit({1, 28, 28}, 10, vs, false, 3);
    Rng r(4);
    const Tensor x = r.gaussian({1, 28, 28});
    for (auto _ : state) benchmark::DoNotOptimize(forward(net, x));
}

void bm_projection_sweep(benchmark::State& state) {
    const int m = int(state.range(0));
    Rng r(5);
    LayerTrace tr;
    tr.path = "bench.W";
    tr.kind = "linear";
    tr.act = TraceAct::identity;
    tr.batches = 8;
    tr.batch = 32;
    tr.X = gaussian_mat(r, tr.batches * tr.batch, m);
    tr.Y = gaussian_mat(r, tr.batches * tr.batch, 32);
    const Mat W = gaussian_mat(r, 32, m);
    ConstrainConfig cfg;
    cfg.proj_epochs = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(project_accuracy_set(W, tr, 1e-2, cfg));
}

void bm_network_bound(benchmark::State& state) {
    const Network net = build_mlp({1, 28, 28}, 10, {256, 128}, 6);
    for (auto _ : state) benchmark::DoNotOptimize(network_lipschitz(net));
}

BENCHMARK(bm_spectral_norm)->Arg(32)->Arg(128)->Arg(512);
BENCHMARK(bm_soft_threshold)->Arg(64)->Arg(256)->Arg(1024);
BENCHMARK(bm_attention_forward)->Arg(1)->Arg(2);
BENCHMARK(bm_projection_sweep)->Arg(64)->Arg(256);
BENCHMARK(bm_network_bound);

} // namespace

BENCHMARK_MAIN();
