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

#include "mla/veracity.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mla/errors.hpp"

namespace mla {

std::vector<Candidate> true_evidence(const Claim& claim, const Corpus& corpus) {
  std::vector<Candidate> out;
  std::set<SentenceRef> seen;
  for (const auto& group : claim.evidence_groups) {
    for (const auto& ref : group) {
      const Document* doc = corpus.find_document(ref.doc_id);
      if (doc == nullptr || ref.sent_idx >= doc->sentences.size()) {
        throw ContractError("true_evidence: unresolved reference " + to_string(ref));
      }
      if (seen.insert(ref).second) out.push_back({ref, prefixed_sentence(*doc, ref.sent_idx)});
    }
  }
  return out;
}

EvidenceSet build_evidence_set(const Claim& claim,
                               std::span<const Candidate> true_evidence,
                               std::span<const ScoredSentence> predicted,
                               std::size_t m, bool training) {
  if (m == 0) throw ContractError("build_evidence_set: M must be >= 1");
  EvidenceSet ev;
  ev.claim_id = claim.id;
  ev.claim = claim.text;
  ev.y = claim.label;
  ev.has_z_labels = training;
  std::set<SentenceRef> seen;
  auto push = [&](const SentenceRef& ref, const std::string& text, int z) {
    if (ev.sentences.size() < m && seen.insert(ref).second) {
      ev.sentences.push_back({ref, text, z});
    }
  };
  if (training) {
    for (const auto& t : true_evidence) push(t.ref, t.text, +1);
  }
  for (const auto& p : predicted) {
    if (training) {
      push(p.ref, p.text, -1);
    } else if (ev.sentences.size() < m) {
      ev.sentences.push_back({p.ref, p.text, -1});
    }
  }
  if (ev.sentences.empty()) {
    throw ContractError("build_evidence_set: claim " + std::to_string(claim.id) +
                        " has no sentences to verify");
  }
  return ev;
}

ClassWeights compute_class_weights(const std::array<std::size_t, kNumLabels>& counts) {
  double total = 0.0;
  for (auto c : counts) {
    if (c == 0) throw ContractError("compute_class_weights: every label needs a count > 0");
    total += static_cast<double>(c);
  }
  ClassWeights w;
  double norm = 0.0;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    w.beta[i] = total / (static_cast<double>(kNumLabels) * static_cast<double>(counts[i]));
    norm += w.beta[i];
  }
  for (auto& b : w.beta) b /= norm;
  return w;
}

// ---------------------------------------------------------------------------
// Model

MlaModel::MlaModel(ParamSet& params, const std::string& prefix, MlaConfig config,
                   std::shared_ptr<const Vocabulary> vocab)
    : config_(std::move(config)),
      encoder_(params, prefix + ".encoder", config_.encoder, std::move(vocab)),
      aux_prefix_(prefix + ".aux_head") {
  config_.encoder = encoder_.config();
  const std::size_t d = config_.encoder.width;
  const std::size_t n = config_.encoder.heads;
  token_attn_ = MhaParams::create(params, prefix + ".token_attn", d, n);
  sentence_attn_ = MhaParams::create(params, prefix + ".sentence_attn", d, n);
  cross_attn_ = MhaParams::create(params, prefix + ".cross_attn", d, n);
  predictor_ = Mlp::create(params, prefix + ".predictor", d, d, kNumLabels);
  aux_head_ = SelectionHead::create(params, aux_prefix_, d);
}

MlaOutput MlaModel::forward(const EvidenceSet& ev, const DropoutContext& dropout) const {
  if (ev.sentences.empty()) throw ContractError("mla_forward: empty evidence set");
  std::vector<Tensor> hidden;
  std::vector<Tensor> cls;
  std::vector<std::uint8_t> mask;
  std::vector<std::int32_t> first_rows;
  std::size_t offset = 0;
  for (const auto& item : ev.sentences) {
    auto enc = encoder_.encode_pair(ev.claim, item.text, dropout);
    first_rows.push_back(static_cast<std::int32_t>(offset));
    offset += enc.hidden.rows();
    mask.insert(mask.end(), enc.mask.begin(), enc.mask.end());
    hidden.push_back(std::move(enc.hidden));
    cls.push_back(std::move(enc.cls));
  }
  const bool any_pad = std::find(mask.begin(), mask.end(), 0) != mask.end();
  const std::span<const std::uint8_t> key_mask =
      any_pad ? std::span<const std::uint8_t>(mask) : std::span<const std::uint8_t>();

  Tensor g = concat_rows(hidden);
  if (config_.use_token_attn) {
    g = add(g, self_mha(g, token_attn_, config_.token_pe, {key_mask, dropout}));
  }
  Tensor e = gather_rows(g, first_rows);
  if (config_.use_sent_attn) {
    e = add(e, self_mha(e, sentence_attn_, /*use_pe=*/false, {{}, dropout}));
  }

  MlaOutput out;
  out.aux_logits = aux_head_.logits(concat_rows(cls), dropout);
  out.s = slice_cols(softmax(out.aux_logits), kPositiveClass, 1);
  const Tensor gate = config_.detach_gate ? detach(out.s) : out.s;
  const Tensor c = encoder_.encode_single(ev.claim, dropout).cls;
  out.a = gated_mha(c, e, e, gate, cross_attn_, config_.gate, {{}, dropout});
  out.logits = predictor_.forward(out.a, dropout);
  out.probs = softmax(out.logits);
  return out;
}

Tensor prediction_loss(const Tensor& logits, Label y, const ClassWeights& weights) {
  return scale(cross_entropy(logits, label_index(y)), weights[y]);
}

Tensor auxiliary_loss(const Tensor& aux_logits, const EvidenceSet& ev) {
  if (!ev.has_z_labels) throw ContractError("joint_loss: evidence set has no z labels");
  if (aux_logits.rows() != ev.sentences.size()) {
    throw DimensionError("auxiliary_loss: one logit row per sentence expected");
  }
  const Tensor logp = log_softmax(aux_logits);
  Tensor total;
  for (std::size_t j = 0; j < ev.sentences.size(); ++j) {
    const Tensor term = pick(logp, 2 * j + class_of(ev.sentences[j].z));
    total = total.defined() ? add(total, term) : term;
  }
  return scale(total, -1.0);
}

Tensor joint_loss(const MlaOutput& out, const EvidenceSet& ev,
                  const ClassWeights& weights, double lambda) {
  if (!ev.y) throw ContractError("joint_loss: evidence set has no veracity label");
  Tensor loss = prediction_loss(out.logits, *ev.y, weights);
  if (lambda != 0.0) loss = add(loss, scale(auxiliary_loss(out.aux_logits, ev), lambda));
  return loss;
}

Label predict_label(std::span<const double> probs) {
  if (probs.size() != kNumLabels) throw DimensionError("predict_label: need 3 probabilities");
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumLabels; ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return kAllLabels[best];
}

Verdict verify(const MlaModel& model, const EvidenceSet& ev) {
  NoGradGuard no_grad;
  const MlaOutput out = model.forward(ev);
  Verdict v;
  v.claim_id = ev.claim_id;
  for (std::size_t i = 0; i < kNumLabels; ++i) v.probabilities[i] = out.probs[i];
  v.predicted_label = predict_label(v.probabilities);
  for (const auto& item : ev.sentences) v.predicted_evidence.push_back(item.ref);
  return v;
}

// ---------------------------------------------------------------------------
// I/O

void save_verdicts(const std::filesystem::path& path, std::span<const Verdict> verdicts) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& v : verdicts) {
    nlohmann::json evidence = nlohmann::json::array();
    for (const auto& ref : v.predicted_evidence) {
      evidence.push_back(nlohmann::json::array({ref.doc_id, ref.sent_idx}));
    }
    out << nlohmann::json{{"claim_id", v.claim_id},
                          {"predicted_label", label_name(v.predicted_label)},
                          {"predicted_evidence", std::move(evidence)},
                          {"probabilities", v.probabilities}}
               .dump()
        << '\n';
  }
}

std::vector<Verdict> load_verdicts(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Verdict> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto r = nlohmann::json::parse(line);
      Verdict v;
      v.claim_id = r.at("claim_id").get<std::int64_t>();
      const auto text = r.at("predicted_label").get<std::string>();
      const auto label = parse_label(text);
      if (!label) throw std::runtime_error("unknown label '" + text + "'");
      v.predicted_label = *label;
      for (const auto& item : r.at("predicted_evidence")) {
        v.predicted_evidence.push_back(
            {item.at(0).get<std::string>(), item.at(1).get<std::size_t>()});
      }
      if (r.contains("probabilities")) {
        v.probabilities = r["probabilities"].get<std::array<double, kNumLabels>>();
      }
      out.push_back(std::move(v));
    } catch (const std::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  return out;
}

}  // namespace mla
