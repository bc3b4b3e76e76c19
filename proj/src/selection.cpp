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

#include "mla/selection.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mla/errors.hpp"

namespace mla {

SelectionHead SelectionHead::create(ParamSet& params, const std::string& prefix,
                                    std::size_t width) {
  return {Mlp::create(params, prefix, width, width, 2)};
}

SentenceSelector::SentenceSelector(ParamSet& params, const std::string& prefix,
                                   const EncoderConfig& config,
                                   std::shared_ptr<const Vocabulary> vocab)
    : encoder_(params, prefix + ".encoder", config, std::move(vocab)),
      head_(SelectionHead::create(params, prefix + ".head", encoder_.config().width)) {}

Tensor SentenceSelector::logits(std::string_view claim, std::string_view sentence,
                                const DropoutContext& dropout) const {
  return head_.logits(encoder_.encode_pair(claim, sentence, dropout).cls, dropout);
}

std::array<double, 2> selection_prob(std::string_view claim,
                                     std::string_view sentence,
                                     const SentenceSelector& selector) {
  NoGradGuard no_grad;
  const Tensor p = softmax(selector.logits(claim, sentence));
  return {p[0], p[1]};
}

Tensor selection_loss(const Tensor& logits, int z) {
  if (z != 1 && z != -1) throw ContractError("selection_loss: z must be +1 or -1");
  return cross_entropy(logits, class_of(z));
}

Tensor selection_loss(std::string_view claim, const SelectionExample& example,
                      const SentenceSelector& selector,
                      const DropoutContext& dropout) {
  return selection_loss(selector.logits(claim, example.text, dropout), example.z);
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

// Up to k entries removed from pool in draw order.
std::vector<std::size_t> draw(std::vector<std::size_t>& pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + rng.uniform_index(pool.size() - i)]);
  }
  std::vector<std::size_t> taken(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  return taken;
}

}  // namespace

std::vector<SelectionExample> sample_training_set(
    const Claim& claim, std::span<const Document* const> gold_docs,
    std::span<const Document* const> retrieved_docs, Rng& rng) {
  const auto evidence = claim.evidence_sentences();
  const std::set<SentenceRef> evidence_set(evidence.begin(), evidence.end());
  const std::size_t r = 2 * evidence.size();
  std::vector<SelectionExample> out;
  auto emit = [&](const Document& doc, std::size_t idx, int z, ExampleOrigin origin) {
    out.push_back({claim.id, doc.doc_id, idx, prefixed_sentence(doc, idx), z, origin});
  };
  auto negatives_of = [&](const Document& doc) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
      if (!evidence_set.contains({doc.doc_id, i})) pool.push_back(i);
    }
    return pool;
  };

  std::set<std::string> gold_ids;
  std::vector<const Document*> golds;
  for (const Document* doc : gold_docs) {
    if (doc != nullptr && gold_ids.insert(doc->doc_id).second) golds.push_back(doc);
  }
  std::set<std::string> retrieved_ids;
  std::vector<const Document*> retrieved;
  for (const Document* doc : retrieved_docs) {
    if (doc != nullptr && retrieved_ids.insert(doc->doc_id).second) retrieved.push_back(doc);
  }

  for (const Document* doc : golds) {
    for (const auto& ref : evidence) {
      if (ref.doc_id == doc->doc_id && ref.sent_idx < doc->sentences.size()) {
        emit(*doc, ref.sent_idx, +1, ExampleOrigin::GoldDoc);
      }
    }
  }
  for (const Document* doc : golds) {
    auto pool = negatives_of(*doc);
    for (std::size_t idx : draw(pool, r, rng)) emit(*doc, idx, -1, ExampleOrigin::GoldDoc);
    if (retrieved_ids.contains(doc->doc_id)) {
      for (std::size_t idx : draw(pool, 2, rng)) {
        emit(*doc, idx, -1, ExampleOrigin::RetrievedDoc);
      }
    }
  }
  for (const Document* doc : retrieved) {
    if (gold_ids.contains(doc->doc_id)) continue;
    auto pool = negatives_of(*doc);
    for (std::size_t idx : draw(pool, 2, rng)) emit(*doc, idx, -1, ExampleOrigin::RetrievedDoc);
  }
  return out;
}

std::vector<SelectionExample> sample_training_set(const Claim& claim,
                                                  const Corpus& corpus, Rng& rng) {
  std::vector<const Document*> gold;
  for (const auto& id : claim.gold_doc_ids()) gold.push_back(corpus.find_document(id));
  std::vector<const Document*> retrieved;
  for (const auto& id : corpus.retrieved(claim.id)) {
    retrieved.push_back(corpus.find_document(id));
  }
  return sample_training_set(claim, gold, retrieved, rng);
}

// ---------------------------------------------------------------------------
// Ranking

std::vector<Candidate> retrieved_candidates(const Corpus& corpus,
                                            std::int64_t claim_id) {
  std::vector<Candidate> out;
  std::set<std::string> seen;
  for (const auto& id : corpus.retrieved(claim_id)) {
    const Document* doc = corpus.find_document(id);
    if (doc == nullptr || !seen.insert(id).second) continue;
    for (std::size_t i = 0; i < doc->sentences.size(); ++i) {
      out.push_back({{doc->doc_id, i}, prefixed_sentence(*doc, i)});
    }
  }
  return out;
}

void sort_ranked(std::vector<ScoredSentence>& ranked) {
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.ref < b.ref;
  });
}

std::vector<ScoredSentence> rank_candidates(std::string_view claim,
                                            std::span<const Candidate> candidates,
                                            const SentenceSelector& selector) {
  std::vector<ScoredSentence> ranked;
  ranked.reserve(candidates.size());
  for (const auto& c : candidates) {
    ranked.push_back({c.ref, c.text, selection_prob(claim, c.text, selector)[kPositiveClass]});
  }
  sort_ranked(ranked);
  return ranked;
}

std::vector<ScoredSentence> select_top_m(std::string_view claim,
                                         std::span<const Candidate> candidates,
                                         std::size_t m,
                                         const SentenceSelector& selector) {
  if (m == 0) throw ContractError("select_top_m: M must be >= 1");
  auto ranked = rank_candidates(claim, candidates, selector);
  if (ranked.size() > m) ranked.resize(m);
  return ranked;
}

// ---------------------------------------------------------------------------
// I/O

void save_selection_predictions(const std::filesystem::path& path,
                                std::span<const SelectionPrediction> predictions) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : predictions) {
    nlohmann::json ranked = nlohmann::json::array();
    for (const auto& s : p.ranked) {
      ranked.push_back({{"doc_id", s.ref.doc_id}, {"sent_idx", s.ref.sent_idx},
                        {"score", s.score}});
    }
    out << nlohmann::json{{"claim_id", p.claim_id}, {"ranked", std::move(ranked)}}.dump()
        << '\n';
  }
}

std::vector<SelectionPrediction> load_selection_predictions(
    const std::filesystem::path& path, const Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<SelectionPrediction> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      SelectionPrediction p;
      p.claim_id = record.at("claim_id").get<std::int64_t>();
      for (const auto& item : record.at("ranked")) {
        ScoredSentence s;
        s.ref = {item.at("doc_id").get<std::string>(), item.at("sent_idx").get<std::size_t>()};
        s.score = item.at("score").get<double>();
        const Document* doc = corpus.find_document(s.ref.doc_id);
        if (doc == nullptr || s.ref.sent_idx >= doc->sentences.size()) {
          throw std::runtime_error("unknown sentence " + to_string(s.ref));
        }
        s.text = prefixed_sentence(*doc, s.ref.sent_idx);
        p.ranked.push_back(std::move(s));
      }
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  return out;
}

}  // namespace mla
