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

// Stand-alone evidence-sentence selector: a pointwise binary classifier over
// (claim, title-prefixed sentence) pairs, its negative sampler, and top-M
// ranking.

#ifndef MLA_SELECTION_HPP_
#define MLA_SELECTION_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mla/corpus.hpp"
#include "mla/encoder.hpp"
#include "mla/layers.hpp"
#include "mla/params.hpp"
#include "mla/rng.hpp"
#include "mla/tensor.hpp"

namespace mla {

enum class ExampleOrigin { GoldDoc, RetrievedDoc };

struct SelectionExample {
  std::int64_t claim_id = 0;
  std::string doc_id;
  std::size_t sent_idx = 0;
  std::string text;  // title-prefixed
  int z = -1;        // +1 evidence, -1 otherwise
  ExampleOrigin origin = ExampleOrigin::GoldDoc;

  SentenceRef ref() const { return {doc_id, sent_idx}; }
};

// Logit index of the positive class; index 0 is the negative class.
inline constexpr std::size_t kPositiveClass = 1;
inline std::size_t class_of(int z) { return z > 0 ? kPositiveClass : 0; }

// MLP d -> d -> 2 on a CLS vector.
struct SelectionHead {
  Mlp mlp;
  static SelectionHead create(ParamSet& params, const std::string& prefix,
                              std::size_t width);
  Tensor logits(const Tensor& cls, const DropoutContext& dropout = {}) const {
    return mlp.forward(cls, dropout);
  }
};

class SentenceSelector {
 public:
  SentenceSelector(ParamSet& params, const std::string& prefix,
                   const EncoderConfig& config,
                   std::shared_ptr<const Vocabulary> vocab);

  // 1 x 2 logits for one pair.
  Tensor logits(std::string_view claim, std::string_view sentence,
                const DropoutContext& dropout = {}) const;

  const SequenceEncoder& encoder() const { return encoder_; }
  const SelectionHead& head() const { return head_; }

 private:
  SequenceEncoder encoder_;
  SelectionHead head_;
};

// (p-, p+) for one pair, without recording a graph.
std::array<double, 2> selection_prob(std::string_view claim,
                                     std::string_view sentence,
                                     const SentenceSelector& selector);
// -log p(z) from 1 x 2 logits.
Tensor selection_loss(const Tensor& logits, int z);
Tensor selection_loss(std::string_view claim, const SelectionExample& example,
                      const SentenceSelector& selector,
                      const DropoutContext& dropout = {});

// Positives are every annotated sentence inside a gold document. With
// r = 2 x (distinct evidence sentences), each gold document adds
// min(r, available) non-evidence sentences and every other retrieved document
// adds min(2, available). A retrieved document that is also gold draws its two
// extra negatives from what is left of its own pool. Duplicate documents in
// either list are ignored after their first appearance.
std::vector<SelectionExample> sample_training_set(
    const Claim& claim, std::span<const Document* const> gold_docs,
    std::span<const Document* const> retrieved_docs, Rng& rng);
// Resolves gold and retrieved documents through the corpus.
std::vector<SelectionExample> sample_training_set(const Claim& claim,
                                                  const Corpus& corpus, Rng& rng);

struct Candidate {
  SentenceRef ref;
  std::string text;  // title-prefixed
};

struct ScoredSentence {
  SentenceRef ref;
  std::string text;
  double score = 0.0;  // p+
};

// Every sentence of every retrieved document, duplicates removed.
std::vector<Candidate> retrieved_candidates(const Corpus& corpus,
                                            std::int64_t claim_id);

// Sorts by score descending, ties by (doc_id, sent_idx) ascending.
void sort_ranked(std::vector<ScoredSentence>& ranked);
std::vector<ScoredSentence> rank_candidates(std::string_view claim,
                                            std::span<const Candidate> candidates,
                                            const SentenceSelector& selector);
std::vector<ScoredSentence> select_top_m(std::string_view claim,
                                         std::span<const Candidate> candidates,
                                         std::size_t m,
                                         const SentenceSelector& selector);

struct SelectionPrediction {
  std::int64_t claim_id = 0;
  std::vector<ScoredSentence> ranked;
};

// {"claim_id": 7, "ranked": [{"doc_id": ..., "sent_idx": 0, "score": 0.9}]}
void save_selection_predictions(const std::filesystem::path& path,
                                std::span<const SelectionPrediction> predictions);
// Sentence texts are restored from the corpus.
std::vector<SelectionPrediction> load_selection_predictions(
    const std::filesystem::path& path, const Corpus& corpus);

}  // namespace mla

#endif  // MLA_SELECTION_HPP_
