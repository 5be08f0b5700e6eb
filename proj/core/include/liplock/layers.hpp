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
#include <variant>
#include <vector>

#include "liplock/tensor.hpp"

namespace liplock {

enum class Act { relu, gelu, identity };

std::string act_name(Act a);
Act act_from_name(const std::string& s);

struct Layer;

// y = W x + b. Accepts a vector (in), a token matrix (rows of width in,
// mapped row-wise), or any tensor whose element count equals in (flattened
// row-major first).
struct Linear {
    Tensor W; // (out, in)
    Tensor b; // (out) or empty
};

struct Conv2D {
    Tensor K; // (oc, ic, kh, kw)
    Tensor b; // (oc) or empty
    int stride = 1;
    int pad = 0;
};

struct Activation {
    Act kind = Act::relu;
};

// Multi-head self-attention with negative squared euclidean scores and a
// shared (tied) query/key projection per head. The value path reads the
// projected tokens, not the raw ones; untying it breaks global Lipschitz
// continuity (move tokens along the projection's null space to inflate
// values while scores stay put).
struct L2Mha {
    Tensor wqk; // (H, d, D), d = D / H
    Tensor wv;  // (H, d, d), applied to projected tokens
    Tensor wo;  // (D, D)
    int heads = 1;
    int dim = 0; // D
    int seq = 0; // token count the layer is built for (used by the bound)
};

// Standard scaled dot-product attention. Baseline only: it admits no
// finite Lipschitz bound, and bound queries on it fail loudly.
struct DpMha {
    Tensor wq; // (H, d, D)
    Tensor wk; // (H, d, D)
    Tensor wv; // (H, d, D)
    Tensor wo; // (D, D)
    int heads = 1;
    int dim = 0;
};

// Non-overlapping patch projection plus additive position table.
// Rank-3 input (C, H, W) is cut into patch x patch tiles; rank-1 input is
// cut into contiguous runs of length patch.
struct PatchEmbed {
    Tensor W;   // (embed, patch_volume)
    Tensor b;   // (embed) or empty
    Tensor pos; // (tokens, embed)
    int patch = 0;
};

struct Residual {
    std::vector<Layer> inner;
};

struct Layer {
    std::variant<Linear, Conv2D, Activation, L2Mha, DpMha, PatchEmbed, Residual> v;
};

struct Network {
    std::vector<Layer> layers;
    std::vector<int> input_shape;
    int classes = 0;
    std::string name;
    uint64_t seed = 0;
    std::string provenance;
};

// Execution trace: one entry per layer (recursing into residual bodies),
// recorded in evaluation order with dotted paths like "L3.inner.L0".
struct TapeEntry {
    std::string path;
    const Layer* layer = nullptr;
    Tensor in;
    Tensor out;
};
using Tape = std::vector<TapeEntry>;

Tensor forward_layer(const Layer& l, const Tensor& x, const std::string& path = "L?",
                     Tape* tape = nullptr);
Tensor forward(const Network& net, const Tensor& x, Tape* tape = nullptr);

// Attention forwards exposed directly for tests and probes.
Tensor l2_attention_forward(const L2Mha& a, const Tensor& x);
Tensor dp_attention_forward(const DpMha& a, const Tensor& x);

// Row-wise softmax of a matrix, numerically stabilized.
Tensor softmax_rows(const Tensor& s);

// Output shape of a layer for a given input shape (no data needed).
std::vector<int> shape_after(const Layer& l, const std::vector<int>& in);
std::vector<int> output_shape(const Network& net);

// Visit every parameter tensor depth-first with its dotted path
// ("L0.W", "L2.wqk", "L3.inner.L1.b", ...). Order is deterministic.
void visit_params(Network& net,
                  const std::function<void(const std::string&, Tensor&)>& fn);
void visit_params(const Network& net,
                  const std::function<void(const std::string&, const Tensor&)>& fn);
int64_t param_count(const Network& net);

// Convolution helpers shared by the bound, the tracing and the tests.
std::vector<int> conv_output_shape(const Conv2D& c, const std::vector<int>& in);
// Materialized matrix of the convolution as a linear map on the flattened
// input; rows = oc*oh*ow, cols = ic*h*w.
Tensor conv_matrix(const Conv2D& c, const std::vector<int>& in_shape);
// Receptive-field column (ic*kh*kw) feeding output position (oy, ox).
Tensor conv_patch(const Conv2D& c, const Tensor& x, int oy, int ox);

// Patch-embedding helpers: token count for an input shape, and the
// flattened patch feeding token t.
int patch_tokens(const PatchEmbed& p, const std::vector<int>& in,
                 const std::string& path = "patch");
Tensor patch_column(const PatchEmbed& p, const Tensor& x, int t);

} // namespace liplock
