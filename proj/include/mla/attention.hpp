// Copyright 2026 The MLA Fact Verification Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scaled dot-product and multi-head attention, including the variants that
// fold per-key selection scores into the final claim-evidence attention.

#ifndef MLA_ATTENTION_HPP_
#define MLA_ATTENTION_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mla/params.hpp"
#include "mla/tensor.hpp"

namespace mla {

// How the per-key score vector s enters a gated attention layer.
enum class GateStrategy {
  ValueOnly,       // V' = V + dropout(s (.) V) per projected value row
  KeyOnly,         // same transform on projected keys
  KeyAndValue,     // both
  DotProductBias,  // logits + s, broadcast over query rows
  NoGate,          // plain multi-head attention
};

std::string_view to_string(GateStrategy strategy);
// Accepts "value", "key", "key_value", "dot_product", "none" (and the
// enumerator spellings).
std::optional<GateStrategy> parse_gate_strategy(std::string_view text);

// Projection weights of one multi-head attention layer. Head i uses column
// block [i*d_k, (i+1)*d_k) of wq/wk/wv as its d_h x d_k projection, with
// d_k = width / heads; wo is the d_h x d_h output projection.
struct MhaParams {
  std::size_t width = 0;
  std::size_t heads = 1;
  Tensor wq, wk, wv, wo;

  static MhaParams create(ParamSet& params, const std::string& prefix,
                          std::size_t width, std::size_t heads);
  std::size_t head_width() const { return width / heads; }
  // sqrt(width / heads)
  double scale() const;
};

// sqrt(width / heads); throws ContractError unless heads divides width.
double attention_scale(std::size_t width, std::size_t heads);

struct AttentionOptions {
  // 1 = key may be attended to. Empty means all keys are visible.
  std::span<const std::uint8_t> key_mask;
  // Applied to the layer output and, for gated layers, to the gated rows.
  DropoutContext dropout;
};

// Fused kernel: for each head h, softmax(Q_h K_h^T / gamma + bias) V_h, with
// heads laid out as contiguous column blocks of q/k (width divisible by
// heads) and v. bias, if given, holds one logit offset per key. Masked keys
// receive weight exactly zero. If weights_out is non-null it receives the
// heads x q x k attention weights.
Tensor multihead_attend(const Tensor& q, const Tensor& k, const Tensor& v,
                        std::size_t heads, double gamma,
                        std::span<const std::uint8_t> key_mask = {},
                        const Tensor* bias = nullptr,
                        std::vector<double>* weights_out = nullptr);

// softmax(Q K^T / gamma) V.
Tensor attn(const Tensor& q, const Tensor& k, const Tensor& v, double gamma);
// The q x k weight matrix of attn (no gradient).
Tensor attention_weights(const Tensor& q, const Tensor& k, double gamma);

Tensor mha(const Tensor& q, const Tensor& k, const Tensor& v,
           const MhaParams& params, const AttentionOptions& options = {});

// mha(X, X, X) with X = H + PE when use_pe, else X = H.
Tensor self_mha(const Tensor& h, const MhaParams& params, bool use_pe,
                const AttentionOptions& options = {});

// Multi-head attention of one query over M keys/values with the score vector
// s (length M, entries in [0, 1]) applied per strategy.
Tensor gated_mha(const Tensor& q, const Tensor& k, const Tensor& v,
                 const Tensor& s, const MhaParams& params,
                 GateStrategy strategy, const AttentionOptions& options = {});

// Static sinusoid table: even columns sin(pos / 10000^(2i/d)), odd columns
// cos of the same angle.
Tensor sinusoid_encoding(std::size_t length, std::size_t width);

}  // namespace mla

#endif  // MLA_ATTENTION_HPP_
