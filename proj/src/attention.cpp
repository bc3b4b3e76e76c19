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

#include "mla/attention.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace mla {

using detail::Node;

std::string_view to_string(GateStrategy strategy) {
  switch (strategy) {
    case GateStrategy::ValueOnly: return "value";
    case GateStrategy::KeyOnly: return "key";
    case GateStrategy::KeyAndValue: return "key_value";
    case GateStrategy::DotProductBias: return "dot_product";
    case GateStrategy::NoGate: return "none";
  }
  return "unknown";
}

std::optional<GateStrategy> parse_gate_strategy(std::string_view text) {
  if (text == "value" || text == "ValueOnly") return GateStrategy::ValueOnly;
  if (text == "key" || text == "KeyOnly") return GateStrategy::KeyOnly;
  if (text == "key_value" || text == "KeyAndValue") {
    return GateStrategy::KeyAndValue;
  }
  if (text == "dot_product" || text == "DotProductBias") {
    return GateStrategy::DotProductBias;
  }
  if (text == "none" || text == "NoGate") return GateStrategy::NoGate;
  return std::nullopt;
}

double attention_scale(std::size_t width, std::size_t heads) {
  if (heads == 0 || width % heads != 0) {
    throw ContractError("attention: width " + std::to_string(width) +
                        " is not divisible by " + std::to_string(heads) +
                        " heads");
  }
  return std::sqrt(static_cast<double>(width / heads));
}

MhaParams MhaParams::create(ParamSet& params, const std::string& prefix,
                            std::size_t width, std::size_t heads) {
  attention_scale(width, heads);  // validates divisibility
  MhaParams p;
  p.width = width;
  p.heads = heads;
  p.wq = params.add(prefix + ".wq", {width, width}, ParamKind::Weight);
  p.wk = params.add(prefix + ".wk", {width, width}, ParamKind::Weight);
  p.wv = params.add(prefix + ".wv", {width, width}, ParamKind::Weight);
  p.wo = params.add(prefix + ".wo", {width, width}, ParamKind::Weight);
  return p;
}

double MhaParams::scale() const { return attention_scale(width, heads); }

// ---------------------------------------------------------------------------
// Fused attention kernel

Tensor multihead_attend(const Tensor& q, const Tensor& k, const Tensor& v,
                        std::size_t heads, double gamma,
                        std::span<const std::uint8_t> key_mask,
                        const Tensor* bias, std::vector<double>* weights_out) {
  if (!q.defined() || !k.defined() || !v.defined()) {
    throw ContractError("attention: empty query, key, or value input");
  }
  if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) {
    throw DimensionError("attention: inputs must be matrices");
  }
  const std::size_t nq = q.rows(), nk = k.rows(), dqk = q.cols(), dv = v.cols();
  if (k.cols() != dqk) {
    throw DimensionError("attention: query " + shape_to_string(q.shape()) +
                         " and key " + shape_to_string(k.shape()) +
                         " widths differ");
  }
  if (v.rows() != nk) {
    throw DimensionError("attention: key " + shape_to_string(k.shape()) +
                         " and value " + shape_to_string(v.shape()) +
                         " row counts differ");
  }
  if (heads == 0 || dqk % heads != 0 || dv % heads != 0) {
    throw ContractError("attention: widths not divisible by head count");
  }
  if (!(gamma > 0.0)) throw ContractError("attention: gamma must be positive");
  if (!key_mask.empty() && key_mask.size() != nk) {
    throw DimensionError("attention: key mask length " +
                         std::to_string(key_mask.size()) + " vs " +
                         std::to_string(nk) + " keys");
  }
  if (bias != nullptr && bias->size() != nk) {
    throw DimensionError("attention: bias of shape " +
                         shape_to_string(bias->shape()) + " vs " +
                         std::to_string(nk) + " keys");
  }
  std::vector<std::uint8_t> visible(nk, 1);
  if (!key_mask.empty()) std::copy(key_mask.begin(), key_mask.end(), visible.begin());
  if (std::none_of(visible.begin(), visible.end(), [](auto m) { return m; })) {
    throw ContractError("attention: no visible keys (empty evidence)");
  }

  const std::size_t dh = dqk / heads, dvh = dv / heads;
  const double inv_gamma = 1.0 / gamma;
  const auto qd = q.data(), kd = k.data(), vd = v.data();
  const double* bd = bias != nullptr ? bias->data().data() : nullptr;

  auto probs = std::make_shared<std::vector<double>>(heads * nq * nk, 0.0);
  std::vector<double> out(nq * dv, 0.0);
  std::vector<double> logits(nk);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t r = 0; r < nq; ++r) {
      const double* qrow = qd.data() + r * dqk + h * dh;
      double mx = -INFINITY;
      for (std::size_t j = 0; j < nk; ++j) {
        if (!visible[j]) continue;
        const double* krow = kd.data() + j * dqk + h * dh;
        double dot = 0.0;
        for (std::size_t c = 0; c < dh; ++c) dot += qrow[c] * krow[c];
        logits[j] = dot * inv_gamma + (bd != nullptr ? bd[j] : 0.0);
        mx = std::max(mx, logits[j]);
      }
      double* p = probs->data() + (h * nq + r) * nk;
      double total = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        if (!visible[j]) continue;
        p[j] = std::exp(logits[j] - mx);
        total += p[j];
      }
      double* orow = out.data() + r * dv + h * dvh;
      for (std::size_t j = 0; j < nk; ++j) {
        if (!visible[j]) continue;
        p[j] /= total;
        const double* vrow = vd.data() + j * dv + h * dvh;
        for (std::size_t c = 0; c < dvh; ++c) orow[c] += p[j] * vrow[c];
      }
    }
  }
  if (weights_out != nullptr) *weights_out = *probs;

  std::vector<std::shared_ptr<Node>> parents = {q.node(), k.node(), v.node()};
  if (bias != nullptr) parents.push_back(bias->node());
  return detail::make_result(
      {nq, dv}, std::move(out), std::move(parents),
      [=](Node& self) {
        const auto& nqn = self.parents[0];
        const auto& nkn = self.parents[1];
        const auto& nvn = self.parents[2];
        double* gq = nqn->requires_grad ? nqn->ensure_grad().data() : nullptr;
        double* gk = nkn->requires_grad ? nkn->ensure_grad().data() : nullptr;
        double* gv = nvn->requires_grad ? nvn->ensure_grad().data() : nullptr;
        double* gb = nullptr;
        if (self.parents.size() > 3 && self.parents[3]->requires_grad) {
          gb = self.parents[3]->ensure_grad().data();
        }
        const double* qv = nqn->data.data();
        const double* kv = nkn->data.data();
        const double* vv = nvn->data.data();
        std::vector<double> dp(nk), ds(nk);
        for (std::size_t h = 0; h < heads; ++h) {
          for (std::size_t r = 0; r < nq; ++r) {
            const double* p = probs->data() + (h * nq + r) * nk;
            const double* go = self.grad.data() + r * dv + h * dvh;
            double row_dot = 0.0;
            for (std::size_t j = 0; j < nk; ++j) {
              if (!visible[j]) continue;
              const double* vrow = vv + j * dv + h * dvh;
              double acc = 0.0;
              for (std::size_t c = 0; c < dvh; ++c) acc += go[c] * vrow[c];
              dp[j] = acc;
              row_dot += p[j] * acc;
              if (gv != nullptr) {
                double* gvrow = gv + j * dv + h * dvh;
                for (std::size_t c = 0; c < dvh; ++c) gvrow[c] += p[j] * go[c];
              }
            }
            for (std::size_t j = 0; j < nk; ++j) {
              ds[j] = visible[j] ? p[j] * (dp[j] - row_dot) : 0.0;
            }
            if (gb != nullptr) {
              for (std::size_t j = 0; j < nk; ++j) gb[j] += ds[j];
            }
            const double* qrow = qv + r * dqk + h * dh;
            double* gqrow = gq != nullptr ? gq + r * dqk + h * dh : nullptr;
            for (std::size_t j = 0; j < nk; ++j) {
              if (!visible[j] || ds[j] == 0.0) continue;
              const double w = ds[j] * inv_gamma;
              const double* krow = kv + j * dqk + h * dh;
              if (gqrow != nullptr) {
                for (std::size_t c = 0; c < dh; ++c) gqrow[c] += w * krow[c];
              }
              if (gk != nullptr) {
                double* gkrow = gk + j * dqk + h * dh;
                for (std::size_t c = 0; c < dh; ++c) gkrow[c] += w * qrow[c];
              }
            }
          }
        }
      });
}

Tensor attn(const Tensor& q, const Tensor& k, const Tensor& v, double gamma) {
  return multihead_attend(q, k, v, 1, gamma);
}

Tensor attention_weights(const Tensor& q, const Tensor& k, double gamma) {
  NoGradGuard no_grad;
  std::vector<double> weights;
  // Values are irrelevant to the weights; a 1-column placeholder suffices.
  multihead_attend(q, k, Tensor::zeros({k.rows(), 1}), 1, gamma, {}, nullptr,
                   &weights);
  return Tensor::from({q.rows(), k.rows()}, std::move(weights));
}

// ---------------------------------------------------------------------------
// Multi-head layers

namespace {

void require_width(const Tensor& t, const MhaParams& params, const char* role) {
  if (t.rank() != 2 || t.cols() != params.width) {
    throw DimensionError(std::string("mha: ") + role + " of shape " +
                         shape_to_string(t.shape()) + " does not have width " +
                         std::to_string(params.width));
  }
}

Tensor gate_rows(const Tensor& projected, const Tensor& s,
                 const DropoutContext& dropout) {
  return add(projected, mla::dropout(scale_rows(projected, s), dropout));
}

}  // namespace

Tensor gated_mha(const Tensor& q, const Tensor& k, const Tensor& v,
                 const Tensor& s, const MhaParams& params,
                 GateStrategy strategy, const AttentionOptions& options) {
  require_width(q, params, "query");
  require_width(k, params, "key");
  require_width(v, params, "value");
  const bool uses_s = strategy != GateStrategy::NoGate;
  if (uses_s) {
    if (!s.defined()) throw ContractError("gated_mha: missing score vector");
    if (s.size() != v.rows() || s.size() != k.rows()) {
      throw DimensionError("gated_mha: score vector of shape " +
                           shape_to_string(s.shape()) + " vs " +
                           std::to_string(v.rows()) + " values");
    }
    for (double x : s.data()) {
      if (!(x >= 0.0 && x <= 1.0)) {
        throw ContractError("gated_mha: score " + std::to_string(x) +
                            " outside [0, 1]");
      }
    }
  }

  const Tensor qh = matmul(q, params.wq);
  Tensor kh = matmul(k, params.wk);
  Tensor vh = matmul(v, params.wv);
  const Tensor* bias = nullptr;
  switch (strategy) {
    case GateStrategy::ValueOnly:
      vh = gate_rows(vh, s, options.dropout);
      break;
    case GateStrategy::KeyOnly:
      kh = gate_rows(kh, s, options.dropout);
      break;
    case GateStrategy::KeyAndValue:
      kh = gate_rows(kh, s, options.dropout);
      vh = gate_rows(vh, s, options.dropout);
      break;
    case GateStrategy::DotProductBias:
      bias = &s;
      break;
    case GateStrategy::NoGate:
      break;
  }
  const Tensor heads = multihead_attend(qh, kh, vh, params.heads,
                                        params.scale(), options.key_mask, bias);
  return dropout(matmul(heads, params.wo), options.dropout);
}

Tensor mha(const Tensor& q, const Tensor& k, const Tensor& v,
           const MhaParams& params, const AttentionOptions& options) {
  return gated_mha(q, k, v, Tensor(), params, GateStrategy::NoGate, options);
}

Tensor self_mha(const Tensor& h, const MhaParams& params, bool use_pe,
                const AttentionOptions& options) {
  require_width(h, params, "input");
  if (!use_pe) return mha(h, h, h, params, options);
  const Tensor x = add(h, sinusoid_encoding(h.rows(), h.cols()));
  return mha(x, x, x, params, options);
}

Tensor sinusoid_encoding(std::size_t length, std::size_t width) {
  std::vector<double> table(length * width);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < width; i += 2) {
      const double angle =
          static_cast<double>(pos) /
          std::pow(10000.0, static_cast<double>(i) / static_cast<double>(width));
      table[pos * width + i] = std::sin(angle);
      if (i + 1 < width) table[pos * width + i + 1] = std::cos(angle);
    }
  }
  return Tensor::from({length, width}, std::move(table));
}

}  // namespace mla
