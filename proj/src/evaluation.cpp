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

#include "mla/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "mla/errors.hpp"

namespace mla {

namespace {

struct Aligned {
  const Claim* gold;
  const Verdict* pred;
};

std::vector<Aligned> align(std::span<const Claim> gold, std::span<const Verdict> predicted) {
  std::map<std::int64_t, const Verdict*> by_id;
  std::vector<std::string> offenders;
  for (const auto& v : predicted) {
    if (!by_id.emplace(v.claim_id, &v).second) {
      offenders.push_back("duplicate prediction " + std::to_string(v.claim_id));
    }
  }
  std::vector<Aligned> out;
  std::set<std::int64_t> gold_ids;
  for (const auto& c : gold) {
    if (!gold_ids.insert(c.id).second) offenders.push_back("duplicate gold " + std::to_string(c.id));
    if (!c.label) offenders.push_back("unlabeled gold " + std::to_string(c.id));
    auto it = by_id.find(c.id);
    if (it == by_id.end()) {
      offenders.push_back("no prediction for " + std::to_string(c.id));
    } else {
      out.push_back({&c, it->second});
    }
  }
  for (const auto& [id, v] : by_id) {
    if (!gold_ids.contains(id)) offenders.push_back("no gold claim for " + std::to_string(id));
  }
  if (!offenders.empty()) {
    throw ValidationError("gold and predicted claim ids differ", std::move(offenders));
  }
  return out;
}

std::span<const SentenceRef> top_m(const Verdict& v, std::size_t m) {
  std::span<const SentenceRef> all(v.predicted_evidence);
  return all.first(std::min(m, all.size()));
}

bool covers_group(const Claim& gold, std::span<const SentenceRef> predicted) {
  const std::set<SentenceRef> have(predicted.begin(), predicted.end());
  return std::any_of(gold.evidence_groups.begin(), gold.evidence_groups.end(),
                     [&](const EvidenceGroup& g) {
                       return std::all_of(g.begin(), g.end(),
                                          [&](const SentenceRef& r) { return have.contains(r); });
                     });
}

std::vector<ClaimResult> score_claims(std::span<const Aligned> rows, std::size_t m) {
  std::vector<ClaimResult> out;
  for (const auto& [gold, pred] : rows) {
    ClaimResult r;
    r.claim_id = gold->id;
    r.label_correct = pred->predicted_label == *gold->label;
    r.evidence_complete =
        *gold->label == Label::NotEnoughInfo || covers_group(*gold, top_m(*pred, m));
    out.push_back(r);
  }
  return out;
}

double mean_of(std::span<const ClaimResult> results, bool (*fn)(const ClaimResult&)) {
  if (results.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : results) hits += fn(r) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

}  // namespace

double label_accuracy(std::span<const Claim> gold, std::span<const Verdict> predicted) {
  const auto results = score_claims(align(gold, predicted), 0);
  return mean_of(results, [](const ClaimResult& r) { return r.label_correct; });
}

double fever_score(std::span<const Claim> gold, std::span<const Verdict> predicted,
                   std::size_t m, std::vector<std::string>* warnings) {
  if (m == 0) throw ContractError("fever_score: M must be >= 1");
  const auto rows = align(gold, predicted);
  if (warnings != nullptr) {
    for (const auto& row : rows) {
      if (row.pred->predicted_evidence.size() > m) {
        warnings->push_back("claim " + std::to_string(row.pred->claim_id) + ": " +
                            std::to_string(row.pred->predicted_evidence.size()) +
                            " predicted sentences, scoring the first " + std::to_string(m));
      }
    }
  }
  const auto results = score_claims(rows, m);
  return mean_of(results,
                 [](const ClaimResult& r) { return r.label_correct && r.evidence_complete; });
}

SelectionPrf selection_prf(std::span<const Claim> gold, std::span<const Verdict> predicted,
                           std::size_t m) {
  if (m == 0) throw ContractError("selection_prf: M must be >= 1");
  std::size_t hits = 0, n_predicted = 0, covered = 0, verifiable = 0;
  for (const auto& [g, p] : align(gold, predicted)) {
    if (*g->label == Label::NotEnoughInfo) continue;
    ++verifiable;
    const auto evidence = g->evidence_sentences();
    const std::set<SentenceRef> gold_set(evidence.begin(), evidence.end());
    const auto sel = top_m(*p, m);
    n_predicted += sel.size();
    for (const auto& ref : sel) hits += gold_set.contains(ref) ? 1 : 0;
    covered += covers_group(*g, sel) ? 1 : 0;
  }
  SelectionPrf out;
  if (n_predicted > 0) out.precision = static_cast<double>(hits) / static_cast<double>(n_predicted);
  if (verifiable > 0) out.recall_at_m = static_cast<double>(covered) / static_cast<double>(verifiable);
  if (out.precision > 0.0 && out.recall_at_m > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall_at_m / (out.precision + out.recall_at_m);
  }
  return out;
}

EvalReport evaluate(std::span<const Claim> gold, std::span<const Verdict> predicted,
                    std::size_t m) {
  EvalReport report;
  report.m = m;
  report.la = label_accuracy(gold, predicted);
  report.fever = fever_score(gold, predicted, m, &report.warnings);
  const auto prf = selection_prf(gold, predicted, m);
  report.precision = prf.precision;
  report.recall_at_m = prf.recall_at_m;
  report.f1 = prf.f1;
  report.per_claim = score_claims(align(gold, predicted), m);
  return report;
}

nlohmann::json report_to_json(const EvalReport& report, bool include_per_claim) {
  nlohmann::json j = {{"label_accuracy", report.la},
                      {"fever_score", report.fever},
                      {"precision", report.precision},
                      {"recall_at_m", report.recall_at_m},
                      {"f1", report.f1},
                      {"m", report.m},
                      {"claims", report.per_claim.size()},
                      {"warnings", report.warnings}};
  if (include_per_claim) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.per_claim) {
      rows.push_back({{"claim_id", r.claim_id},
                      {"label_correct", r.label_correct},
                      {"evidence_complete", r.evidence_complete}});
    }
    j["per_claim"] = std::move(rows);
  }
  return j;
}

std::string format_report_table(const EvalReport& report) {
  const std::pair<std::string, double> rows[] = {
      {"LA", report.la},
      {"FEVER", report.fever},
      {"Precision", report.precision},
      {"Recall@" + std::to_string(report.m), report.recall_at_m},
      {"F1", report.f1}};
  std::ostringstream out;
  char buf[64];
  for (const auto& [name, value] : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %7.2f\n", name.c_str(), 100.0 * value);
    out << buf;
  }
  return out.str();
}

}  // namespace mla
