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

// Claim/document/retrieval data model, JSONL I/O in FEVER-like shapes, and a
// seeded synthetic corpus generator.
//
// On disk (UTF-8, one JSON object per line):
//   documents:  {"doc_id": "Amber_River", "sentences": ["...", ...]}
//   claims:     {"id": 7, "claim": "...", "label": "SUPPORTS",
//                "evidence": [[["Amber_River", 0], ...], ...]}
//   retrievals: {"id": 7, "predicted_pages": ["Amber_River", ...]}
// Evidence entries in the four-element FEVER layout
// [annotation_id, evidence_id, doc_id, sent_idx] are accepted as well.

#ifndef MLA_CORPUS_HPP_
#define MLA_CORPUS_HPP_

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mla {

enum class Label : std::uint8_t { Supports = 0, Refutes = 1, NotEnoughInfo = 2 };
inline constexpr std::size_t kNumLabels = 3;
inline constexpr std::array<Label, kNumLabels> kAllLabels = {
    Label::Supports, Label::Refutes, Label::NotEnoughInfo};

std::string_view label_name(Label label);  // "SUPPORTS", "REFUTES", "NOT ENOUGH INFO"
char label_letter(Label label);            // 'S', 'R', 'N'
// Accepts the long names and the single letters S/R/N.
std::optional<Label> parse_label(std::string_view text);
inline std::size_t label_index(Label label) { return static_cast<std::size_t>(label); }

struct SentenceRef {
  std::string doc_id;
  std::size_t sent_idx = 0;
  auto operator<=>(const SentenceRef&) const = default;
  bool operator==(const SentenceRef&) const = default;
};
std::string to_string(const SentenceRef& ref);

// One complete, sufficient evidence set.
using EvidenceGroup = std::vector<SentenceRef>;

struct Claim {
  std::int64_t id = 0;
  std::string text;
  std::optional<Label> label;
  std::vector<EvidenceGroup> evidence_groups;

  // Union of all groups, sorted, without duplicates.
  std::vector<SentenceRef> evidence_sentences() const;
  // Documents referenced by any group, in order of first reference.
  std::vector<std::string> gold_doc_ids() const;
  bool operator==(const Claim&) const = default;
};

struct Document {
  std::string doc_id;  // article title, underscores for spaces
  std::vector<std::string> sentences;
  bool operator==(const Document&) const = default;
};

struct RetrievalResult {
  std::int64_t claim_id = 0;
  std::vector<std::string> doc_ids;
  bool operator==(const RetrievalResult&) const = default;
};

// "Amber_River" -> "Amber River"
std::string title_text(std::string_view doc_id);
// "<title> : <sentence>"
std::string prefixed_sentence(const Document& doc, std::size_t sent_idx);

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Document> documents, std::vector<Claim> claims,
         std::vector<RetrievalResult> retrievals);

  const std::vector<Document>& documents() const { return documents_; }
  const std::vector<Claim>& claims() const { return claims_; }
  const std::vector<RetrievalResult>& retrievals() const { return retrievals_; }

  const Document* find_document(std::string_view doc_id) const;
  const Claim* find_claim(std::int64_t id) const;
  // Retrieved doc ids for a claim; empty if there is no retrieval record.
  std::span<const std::string> retrieved(std::int64_t claim_id) const;
  bool resolves(const SentenceRef& ref) const;

  // Throws ValidationError listing every dangling or inconsistent reference.
  void validate() const;

 private:
  void reindex();

  std::vector<Document> documents_;
  std::vector<Claim> claims_;
  std::vector<RetrievalResult> retrievals_;
  std::unordered_map<std::string, std::size_t> doc_index_;
  std::unordered_map<std::int64_t, std::size_t> claim_index_;
  std::unordered_map<std::int64_t, std::size_t> retrieval_index_;
};

std::vector<Document> load_documents(const std::filesystem::path& path);
std::vector<Claim> load_claims(const std::filesystem::path& path);
std::vector<RetrievalResult> load_retrievals(const std::filesystem::path& path);
void save_documents(const std::filesystem::path& path,
                    std::span<const Document> documents);
void save_claims(const std::filesystem::path& path, std::span<const Claim> claims);
void save_retrievals(const std::filesystem::path& path,
                     std::span<const RetrievalResult> retrievals);

// Loads and cross-validates the three files.
Corpus load_corpus(const std::filesystem::path& documents,
                   const std::filesystem::path& claims,
                   const std::filesystem::path& retrievals);
// documents.jsonl / claims.jsonl / retrievals.jsonl inside dir.
Corpus load_corpus(const std::filesystem::path& dir);
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);

enum class EvidencePattern { Single, TwoSentence, Mixed };
enum class RefuteStyle { Negation, Substitution, Mixed };

struct SyntheticSpec {
  std::size_t n_claims = 1000;
  // 0 picks max(8, n_claims / 5).
  std::size_t n_docs = 0;
  std::size_t sents_per_doc = 6;
  EvidencePattern evidence_pattern = EvidencePattern::Single;
  RefuteStyle refute_style = RefuteStyle::Negation;
  // Documents per retrieval list: the topic document plus distractors.
  std::size_t retrieved_per_claim = 3;
  // Relative S : R : N frequencies; defaults to the FEVER training split.
  std::array<double, kNumLabels> label_ratios = {80035.0, 29775.0, 35659.0};
  std::uint64_t seed = 2021;
};

std::optional<EvidencePattern> parse_evidence_pattern(std::string_view text);

// Label counts allotted by the generator: largest-remainder rounding of
// n_claims * ratio, with every label present at least once.
std::array<std::size_t, kNumLabels> synthetic_label_counts(const SyntheticSpec& spec);

// S claims restate a planted evidence group, R claims negate or substitute
// part of it, and N claims pair the topic entity with a relation its article
// never states. Uses integer draws only, so output is platform independent.
Corpus generate_synthetic(const SyntheticSpec& spec);

struct CorpusStats {
  std::array<std::size_t, kNumLabels> label_counts{};
  std::size_t unlabeled = 0;
  // evidence-group size -> number of groups
  std::map<std::size_t, std::size_t> group_sizes;
};
CorpusStats corpus_stats(std::span<const Claim> claims);

struct ClaimSplit {
  std::vector<Claim> train;
  std::vector<Claim> heldout;
};
// Seeded shuffle, then the last round(fraction * n) claims are held out.
ClaimSplit split_claims(std::span<const Claim> claims, double heldout_fraction,
                        std::uint64_t seed);

}  // namespace mla

#endif  // MLA_CORPUS_HPP_
