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

// The multi-level attention verifier: per-pair encoding, token- and
// sentence-level inter-sentence self-attention, score-gated claim-evidence
// attention, and the veracity and auxiliary selection heads.

#ifndef MLA_VERACITY_HPP_
#define MLA_VERACITY_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mla/attention.hpp"
#include "mla/corpus.hpp"
#include "mla/encoder.hpp"
#include "mla/layers.hpp"
#include "mla/params.hpp"
#include "mla/selection.hpp"
#include "mla/tensor.hpp"

namespace mla {

struct EvidenceItem {
  SentenceRef ref;
  std::string text;  // title-prefixed
  int z = -1;        // +1 for annotated evidence
};

struct EvidenceSet {
  std::int64_t claim_id = 0;
  std::string claim;
  std::vector<EvidenceItem> sentences;
  std::optional<Label> y;
  bool has_z_labels = false;
};

// Annotated sentences of a claim in group order, first occurrence kept.
std::vector<Candidate> true_evidence(const Claim& claim, const Corpus& corpus);

// Training: true evidence followed by the predicted list, deduplicated on
// (doc_id, sent_idx) with the first occurrence kept, cut to m. Items from the
// true list get z = +1. Test: the first m predicted sentences. Throws
// ContractError when the result would be empty.
EvidenceSet build_evidence_set(const Claim& claim,
                               std::span<const Candidate> true_evidence,
                               std::span<const ScoredSentence> predicted,
                               std::size_t m, bool training);

// Rows in the token-level attention when every pair is padded to max_len.
inline std::size_t concatenated_length(std::size_t max_len, std::size_t m) {
  return max_len * m;
}

struct ClassWeights {
  std::array<double, kNumLabels> beta{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double operator[](Label y) const { return beta[label_index(y)]; }
};

// beta_y proportional to N / (3 N_y), normalized to sum to 1.
ClassWeights compute_class_weights(const std::array<std::size_t, kNumLabels>& counts);

struct MlaConfig {
  EncoderConfig encoder;
  GateStrategy gate = GateStrategy::ValueOnly;
  bool use_token_attn = true;
  bool use_sent_attn = true;
  // Sinusoid positions over the concatenated token sequence.
  bool token_pe = true;
  // Stop gradients of the verdict loss from reaching the score vector s.
  bool detach_gate = false;
};

struct MlaOutput {
  Tensor logits;      // 1 x 3
  Tensor probs;       // 1 x 3
  Tensor aux_logits;  // M' x 2, auxiliary selection head on each cls_j
  Tensor s;           // M' x 1, positive-class probability per sentence
  Tensor a;           // 1 x d_h, output of the gated claim-evidence attention
};

class MlaModel {
 public:
  MlaModel(ParamSet& params, const std::string& prefix, MlaConfig config,
           std::shared_ptr<const Vocabulary> vocab);

  MlaOutput forward(const EvidenceSet& ev, const DropoutContext& dropout = {}) const;

  const MlaConfig& config() const { return config_; }
  const SequenceEncoder& encoder() const { return encoder_; }
  // Prefix shared by the auxiliary head's parameters.
  const std::string& aux_prefix() const { return aux_prefix_; }

 private:
  MlaConfig config_;
  SequenceEncoder encoder_;
  MhaParams token_attn_;
  MhaParams sentence_attn_;
  MhaParams cross_attn_;
  Mlp predictor_;
  SelectionHead aux_head_;
  std::string aux_prefix_;
};

// -beta_y log p_y[y], from logits.
Tensor prediction_loss(const Tensor& logits, Label y, const ClassWeights& weights);
// Sum over sentences of -log p(z_j) under the auxiliary head.
Tensor auxiliary_loss(const Tensor& aux_logits, const EvidenceSet& ev);
// prediction_loss + lambda * auxiliary_loss. lambda = 0 skips the auxiliary
// term entirely.
Tensor joint_loss(const MlaOutput& out, const EvidenceSet& ev,
                  const ClassWeights& weights, double lambda);

// Argmax with ties resolved S < R < N.
Label predict_label(std::span<const double> probs);

struct Verdict {
  std::int64_t claim_id = 0;
  Label predicted_label = Label::NotEnoughInfo;
  std::vector<SentenceRef> predicted_evidence;
  std::array<double, kNumLabels> probabilities{};
};

Verdict verify(const MlaModel& model, const EvidenceSet& ev);

// {"claim_id", "predicted_label", "predicted_evidence": [[doc, idx]],
//  "probabilities": [pS, pR, pN]}
void save_verdicts(const std::filesystem::path& path, std::span<const Verdict> verdicts);
std::vector<Verdict> load_verdicts(const std::filesystem::path& path);

}  // namespace mla

#endif  // MLA_VERACITY_HPP_
