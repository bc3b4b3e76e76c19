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

#include "mla/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <set>

#include "json.hpp"
#include "mla/errors.hpp"
#include "mla/rng.hpp"

namespace mla {

using nlohmann::json;

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Supports: return "SUPPORTS";
    case Label::Refutes: return "REFUTES";
    case Label::NotEnoughInfo: return "NOT ENOUGH INFO";
  }
  return "?";
}

char label_letter(Label label) { return "SRN"[label_index(label)]; }

std::optional<Label> parse_label(std::string_view text) {
  if (text == "SUPPORTS" || text == "S") return Label::Supports;
  if (text == "REFUTES" || text == "R") return Label::Refutes;
  if (text == "NOT ENOUGH INFO" || text == "N") return Label::NotEnoughInfo;
  return std::nullopt;
}

std::string to_string(const SentenceRef& ref) {
  return ref.doc_id + "#" + std::to_string(ref.sent_idx);
}

std::vector<SentenceRef> Claim::evidence_sentences() const {
  std::set<SentenceRef> all;
  for (const auto& group : evidence_groups) all.insert(group.begin(), group.end());
  return {all.begin(), all.end()};
}

std::vector<std::string> Claim::gold_doc_ids() const {
  std::vector<std::string> ids;
  for (const auto& group : evidence_groups) {
    for (const auto& ref : group) {
      if (std::find(ids.begin(), ids.end(), ref.doc_id) == ids.end()) {
        ids.push_back(ref.doc_id);
      }
    }
  }
  return ids;
}

std::string title_text(std::string_view doc_id) {
  std::string out(doc_id);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string prefixed_sentence(const Document& doc, std::size_t sent_idx) {
  return title_text(doc.doc_id) + " : " + doc.sentences.at(sent_idx);
}

// ---------------------------------------------------------------------------
// Corpus

Corpus::Corpus(std::vector<Document> documents, std::vector<Claim> claims,
               std::vector<RetrievalResult> retrievals)
    : documents_(std::move(documents)),
      claims_(std::move(claims)),
      retrievals_(std::move(retrievals)) {
  reindex();
}

void Corpus::reindex() {
  doc_index_.clear();
  claim_index_.clear();
  retrieval_index_.clear();
  for (std::size_t i = 0; i < documents_.size(); ++i) {
    doc_index_.emplace(documents_[i].doc_id, i);
  }
  for (std::size_t i = 0; i < claims_.size(); ++i) claim_index_.emplace(claims_[i].id, i);
  for (std::size_t i = 0; i < retrievals_.size(); ++i) {
    retrieval_index_.emplace(retrievals_[i].claim_id, i);
  }
}

const Document* Corpus::find_document(std::string_view doc_id) const {
  auto it = doc_index_.find(std::string(doc_id));
  return it == doc_index_.end() ? nullptr : &documents_[it->second];
}

const Claim* Corpus::find_claim(std::int64_t id) const {
  auto it = claim_index_.find(id);
  return it == claim_index_.end() ? nullptr : &claims_[it->second];
}

std::span<const std::string> Corpus::retrieved(std::int64_t claim_id) const {
  auto it = retrieval_index_.find(claim_id);
  if (it == retrieval_index_.end()) return {};
  return retrievals_[it->second].doc_ids;
}

bool Corpus::resolves(const SentenceRef& ref) const {
  const Document* doc = find_document(ref.doc_id);
  return doc != nullptr && ref.sent_idx < doc->sentences.size();
}

void Corpus::validate() const {
  std::vector<std::string> offenders;
  if (doc_index_.size() != documents_.size()) {
    std::set<std::string> seen;
    for (const auto& d : documents_) {
      if (!seen.insert(d.doc_id).second) offenders.push_back("duplicate document " + d.doc_id);
    }
  }
  if (claim_index_.size() != claims_.size()) {
    std::set<std::int64_t> seen;
    for (const auto& c : claims_) {
      if (!seen.insert(c.id).second) {
        offenders.push_back("duplicate claim " + std::to_string(c.id));
      }
    }
  }
  for (const auto& claim : claims_) {
    const std::string who = "claim " + std::to_string(claim.id);
    if (claim.label == Label::NotEnoughInfo && !claim.evidence_groups.empty()) {
      offenders.push_back(who + " is NOT ENOUGH INFO but lists evidence");
    }
    for (const auto& group : claim.evidence_groups) {
      if (group.empty()) offenders.push_back(who + " has an empty evidence group");
      for (const auto& ref : group) {
        if (!resolves(ref)) offenders.push_back(who + " -> " + to_string(ref));
      }
    }
  }
  for (const auto& r : retrievals_) {
    for (const auto& id : r.doc_ids) {
      if (find_document(id) == nullptr) {
        offenders.push_back("retrieval " + std::to_string(r.claim_id) + " -> " + id);
      }
    }
  }
  if (!offenders.empty()) {
    throw ValidationError("corpus has dangling or inconsistent references",
                          std::move(offenders));
  }
}

// ---------------------------------------------------------------------------
// JSONL I/O

namespace {

void for_each_record(const std::filesystem::path& path,
                     const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    json record;
    try {
      record = json::parse(line);
      if (!record.is_object()) throw std::runtime_error("record is not an object");
      fn(record, line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
}

void write_lines(const std::filesystem::path& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
}

std::size_t as_index(const json& v) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::size_t>(v.get<std::int64_t>());
  }
  throw std::runtime_error("sentence index must be a non-negative integer");
}

std::optional<SentenceRef> parse_ref(const json& item) {
  if (!item.is_array()) throw std::runtime_error("evidence entry is not an array");
  if (item.size() == 2) return SentenceRef{item[0].get<std::string>(), as_index(item[1])};
  if (item.size() == 4) {
    if (item[2].is_null()) return std::nullopt;
    return SentenceRef{item[2].get<std::string>(), as_index(item[3])};
  }
  throw std::runtime_error("evidence entry must have 2 or 4 elements");
}

}  // namespace

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::vector<Document> docs;
  for_each_record(path, [&](const json& r, std::size_t) {
    Document d;
    d.doc_id = r.at("doc_id").get<std::string>();
    d.sentences = r.at("sentences").get<std::vector<std::string>>();
    docs.push_back(std::move(d));
  });
  return docs;
}

std::vector<Claim> load_claims(const std::filesystem::path& path) {
  std::vector<Claim> claims;
  for_each_record(path, [&](const json& r, std::size_t) {
    Claim c;
    c.id = r.at("id").get<std::int64_t>();
    c.text = r.at("claim").get<std::string>();
    if (r.contains("label") && !r["label"].is_null()) {
      const auto text = r["label"].get<std::string>();
      c.label = parse_label(text);
      if (!c.label) throw std::runtime_error("unknown label '" + text + "'");
    }
    if (r.contains("evidence")) {
      for (const auto& group : r["evidence"]) {
        if (!group.is_array()) throw std::runtime_error("evidence group is not an array");
        EvidenceGroup g;
        for (const auto& item : group) {
          if (auto ref = parse_ref(item)) g.push_back(std::move(*ref));
        }
        if (!g.empty()) c.evidence_groups.push_back(std::move(g));
      }
    }
    claims.push_back(std::move(c));
  });
  return claims;
}

std::vector<RetrievalResult> load_retrievals(const std::filesystem::path& path) {
  std::vector<RetrievalResult> out;
  for_each_record(path, [&](const json& r, std::size_t) {
    RetrievalResult rr;
    rr.claim_id = r.at("id").get<std::int64_t>();
    rr.doc_ids = r.at("predicted_pages").get<std::vector<std::string>>();
    out.push_back(std::move(rr));
  });
  return out;
}

void save_documents(const std::filesystem::path& path,
                    std::span<const Document> documents) {
  std::vector<json> records;
  for (const auto& d : documents) {
    records.push_back({{"doc_id", d.doc_id}, {"sentences", d.sentences}});
  }
  write_lines(path, records);
}

void save_claims(const std::filesystem::path& path, std::span<const Claim> claims) {
  std::vector<json> records;
  for (const auto& c : claims) {
    json evidence = json::array();
    for (const auto& group : c.evidence_groups) {
      json g = json::array();
      for (const auto& ref : group) g.push_back(json::array({ref.doc_id, ref.sent_idx}));
      evidence.push_back(std::move(g));
    }
    json r = {{"id", c.id}, {"claim", c.text}, {"evidence", std::move(evidence)}};
    if (c.label) r["label"] = label_name(*c.label);
    records.push_back(std::move(r));
  }
  write_lines(path, records);
}

void save_retrievals(const std::filesystem::path& path,
                     std::span<const RetrievalResult> retrievals) {
  std::vector<json> records;
  for (const auto& r : retrievals) {
    records.push_back({{"id", r.claim_id}, {"predicted_pages", r.doc_ids}});
  }
  write_lines(path, records);
}

Corpus load_corpus(const std::filesystem::path& documents,
                   const std::filesystem::path& claims,
                   const std::filesystem::path& retrievals) {
  Corpus corpus(load_documents(documents), load_claims(claims),
                load_retrievals(retrievals));
  corpus.validate();
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& dir) {
  return load_corpus(dir / "documents.jsonl", dir / "claims.jsonl",
                     dir / "retrievals.jsonl");
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_documents(dir / "documents.jsonl", corpus.documents());
  save_claims(dir / "claims.jsonl", corpus.claims());
  save_retrievals(dir / "retrievals.jsonl", corpus.retrievals());
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

constexpr const char* kTitleHeads[] = {
    "amber",  "birch",   "cedar",  "delta",  "ember",  "fjord",
    "granite", "harbor", "iris",   "juniper", "kestrel", "lumen",
    "maple",  "nimbus",  "onyx",   "prairie", "quartz", "raven",
    "sierra", "tundra",  "umber",  "violet", "willow", "zephyr"};
constexpr const char* kTitleTails[] = {"river",  "valley", "tower",  "bridge",
                                       "castle", "forest", "lake",   "meadow",
                                       "summit", "island", "canyon", "abbey"};
constexpr const char* kRelations[] = {
    "borders", "exports", "hosts",    "founded",  "employs",  "imports",
    "produces", "owns",   "sponsors", "trains",   "protects", "supplies",
    "funds",   "admires", "rivals",   "governs"};
constexpr const char* kObjects[] = {
    "copper", "salmon", "wool",   "tea",    "glass",   "timber", "silk",
    "coal",   "rice",   "marble", "cotton", "wine",    "iron",   "honey",
    "cheese", "paper",  "pepper", "coffee", "tin",     "olives", "saffron",
    "ivory",  "cocoa",  "barley", "lace",   "pearls",  "cobalt", "jade"};

constexpr std::size_t kNumRelations = std::size(kRelations);
constexpr std::size_t kNumObjects = std::size(kObjects);

std::string capitalize(std::string word) {
  if (!word.empty() && word[0] >= 'a' && word[0] <= 'z') word[0] = static_cast<char>(word[0] - 32);
  return word;
}

struct PlantedFact {
  std::size_t relation;
  std::size_t object;
};

struct TopicDoc {
  std::string doc_id;
  std::string name;  // "Amber River"
  std::vector<PlantedFact> facts;
};

std::string fact_phrase(const PlantedFact& f) {
  return std::string(kRelations[f.relation]) + " " + kObjects[f.object];
}

// k distinct draws from [0, n) in draw order.
std::vector<std::size_t> sample_distinct(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.uniform_index(n - i)]);
  pool.resize(k);
  return pool;
}

}  // namespace

std::optional<EvidencePattern> parse_evidence_pattern(std::string_view text) {
  if (text == "single") return EvidencePattern::Single;
  if (text == "two-sentence" || text == "two_sentence") return EvidencePattern::TwoSentence;
  if (text == "mixed") return EvidencePattern::Mixed;
  return std::nullopt;
}

std::array<std::size_t, kNumLabels> synthetic_label_counts(const SyntheticSpec& spec) {
  if (spec.n_claims < kNumLabels) {
    throw ContractError("generate_synthetic: need at least 3 claims (one per label)");
  }
  double total = 0.0;
  for (double r : spec.label_ratios) {
    if (!(r > 0.0)) throw ContractError("generate_synthetic: label ratios must be positive");
    total += r;
  }
  std::array<std::size_t, kNumLabels> counts{};
  std::array<double, kNumLabels> remainder{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const double exact = static_cast<double>(spec.n_claims) * spec.label_ratios[i] / total;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  while (assigned < spec.n_claims) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < kNumLabels; ++i) {
      if (remainder[i] > remainder[best]) best = i;
    }
    ++counts[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (counts[i] == 0) {
      auto donor = std::max_element(counts.begin(), counts.end());
      --*donor;
      counts[i] = 1;
    }
  }
  return counts;
}

Corpus generate_synthetic(const SyntheticSpec& spec) {
  const auto label_counts = synthetic_label_counts(spec);
  const std::size_t n_docs =
      spec.n_docs != 0 ? spec.n_docs : std::max<std::size_t>(8, spec.n_claims / 5);
  const std::size_t max_titles = std::size(kTitleHeads) * std::size(kTitleTails);
  if (n_docs > max_titles) {
    throw ContractError("generate_synthetic: at most " + std::to_string(max_titles) +
                        " documents");
  }
  if (spec.sents_per_doc < 2 || spec.sents_per_doc >= kNumRelations) {
    throw ContractError("generate_synthetic: sents_per_doc must be in [2, " +
                        std::to_string(kNumRelations - 1) + "]");
  }
  if (spec.retrieved_per_claim == 0 || spec.retrieved_per_claim > n_docs) {
    throw ContractError("generate_synthetic: retrieved_per_claim must be in [1, n_docs]");
  }

  Rng rng(spec.seed);
  std::vector<Document> documents;
  std::vector<TopicDoc> topics;
  for (std::size_t title : sample_distinct(rng, max_titles, n_docs)) {
    const std::string head = kTitleHeads[title / std::size(kTitleTails)];
    const std::string tail = kTitleTails[title % std::size(kTitleTails)];
    TopicDoc topic;
    topic.doc_id = capitalize(head) + "_" + capitalize(tail);
    topic.name = capitalize(head) + " " + capitalize(tail);
    Document doc{topic.doc_id, {}};
    const auto relations = sample_distinct(rng, kNumRelations, spec.sents_per_doc);
    const auto objects = sample_distinct(rng, kNumObjects, spec.sents_per_doc);
    for (std::size_t f = 0; f < spec.sents_per_doc; ++f) {
      const PlantedFact fact{relations[f], objects[f]};
      const std::string subject = doc.sentences.empty() ? topic.name : "It";
      doc.sentences.push_back(subject + " " + fact_phrase(fact) + ".");
      topic.facts.push_back(fact);
    }
    documents.push_back(std::move(doc));
    topics.push_back(std::move(topic));
  }

  std::vector<Label> labels;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    labels.insert(labels.end(), label_counts[i], kAllLabels[i]);
  }
  rng.shuffle(labels);

  auto negate = [&](const PlantedFact& fact, bool substitute) {
    if (!substitute) return "never " + fact_phrase(fact);
    std::size_t other = rng.uniform_index(kNumObjects - 1);
    if (other >= fact.object) ++other;
    return fact_phrase({fact.relation, other});
  };

  std::vector<Claim> claims;
  std::vector<RetrievalResult> retrievals;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const Label label = labels[i];
    const std::size_t topic_idx = rng.uniform_index(n_docs);
    const TopicDoc& topic = topics[topic_idx];
    bool two = spec.evidence_pattern == EvidencePattern::TwoSentence;
    if (spec.evidence_pattern == EvidencePattern::Mixed) two = rng.bernoulli(0.5);
    bool substitute = spec.refute_style == RefuteStyle::Substitution;
    if (spec.refute_style == RefuteStyle::Mixed) substitute = rng.bernoulli(0.5);

    Claim claim;
    claim.id = static_cast<std::int64_t>(i + 1);
    claim.label = label;
    const auto picked = sample_distinct(rng, topic.facts.size(), two ? 2 : 1);
    std::string body;
    if (label == Label::NotEnoughInfo) {
      // A relation the article never states; for two-part claims the first
      // part is a true fact, which is topical but still insufficient.
      std::vector<std::size_t> absent_rel, absent_obj;
      for (std::size_t rel = 0; rel < kNumRelations; ++rel) {
        if (std::none_of(topic.facts.begin(), topic.facts.end(),
                         [&](const PlantedFact& f) { return f.relation == rel; })) {
          absent_rel.push_back(rel);
        }
      }
      for (std::size_t obj = 0; obj < kNumObjects; ++obj) {
        if (std::none_of(topic.facts.begin(), topic.facts.end(),
                         [&](const PlantedFact& f) { return f.object == obj; })) {
          absent_obj.push_back(obj);
        }
      }
      const PlantedFact missing{absent_rel[rng.uniform_index(absent_rel.size())],
                                absent_obj[rng.uniform_index(absent_obj.size())]};
      body = two ? fact_phrase(topic.facts[picked[0]]) + " and " + fact_phrase(missing)
                 : fact_phrase(missing);
    } else {
      EvidenceGroup group;
      for (std::size_t f : picked) group.push_back({topic.doc_id, f});
      claim.evidence_groups.push_back(std::move(group));
      const PlantedFact& last = topic.facts[picked.back()];
      const std::string tail =
          label == Label::Refutes ? negate(last, substitute) : fact_phrase(last);
      body = two ? fact_phrase(topic.facts[picked[0]]) + " and " + tail : tail;
    }
    claim.text = topic.name + " " + body + ".";

    RetrievalResult retrieval{claim.id, {topic.doc_id}};
    for (std::size_t d : sample_distinct(rng, n_docs - 1, spec.retrieved_per_claim - 1)) {
      retrieval.doc_ids.push_back(topics[d >= topic_idx ? d + 1 : d].doc_id);
    }
    rng.shuffle(retrieval.doc_ids);
    claims.push_back(std::move(claim));
    retrievals.push_back(std::move(retrieval));
  }
  return Corpus(std::move(documents), std::move(claims), std::move(retrievals));
}

CorpusStats corpus_stats(std::span<const Claim> claims) {
  CorpusStats stats;
  for (const auto& c : claims) {
    if (c.label) {
      ++stats.label_counts[label_index(*c.label)];
    } else {
      ++stats.unlabeled;
    }
    for (const auto& g : c.evidence_groups) ++stats.group_sizes[g.size()];
  }
  return stats;
}

ClaimSplit split_claims(std::span<const Claim> claims, double heldout_fraction,
                        std::uint64_t seed) {
  if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) {
    throw ContractError("split_claims: fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> order(claims.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_heldout = static_cast<std::size_t>(
      std::llround(heldout_fraction * static_cast<double>(claims.size())));
  ClaimSplit split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& dst = i + n_heldout >= order.size() ? split.heldout : split.train;
    dst.push_back(claims[order[i]]);
  }
  return split;
}

}  // namespace mla
