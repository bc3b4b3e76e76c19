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

// Claim-level scorers: label accuracy, the FEVER score, and evidence
// precision / recall@M / F1.

#ifndef MLA_EVALUATION_HPP_
#define MLA_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mla/corpus.hpp"
#include "mla/veracity.hpp"

namespace mla {

struct ClaimResult {
  std::int64_t claim_id = 0;
  bool label_correct = false;
  // Some gold group is covered by the top-M predicted sentences. Always true
  // for NOT ENOUGH INFO claims.
  bool evidence_complete = false;
};

struct SelectionPrf {
  double precision = 0.0;
  double recall_at_m = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double la = 0.0;
  double fever = 0.0;
  double precision = 0.0;
  double recall_at_m = 0.0;
  double f1 = 0.0;
  std::size_t m = 5;
  std::vector<ClaimResult> per_claim;
  std::vector<std::string> warnings;
};

// Both functions require the gold and predicted claim-id sets to match and
// throw ValidationError otherwise. Gold claims must carry a label.
double label_accuracy(std::span<const Claim> gold, std::span<const Verdict> predicted);
// Evidence lists longer than m are cut to their first m entries; a warning
// naming each such claim is appended to warnings when given.
double fever_score(std::span<const Claim> gold, std::span<const Verdict> predicted,
                   std::size_t m, std::vector<std::string>* warnings = nullptr);
// NOT ENOUGH INFO claims are left out. Precision is micro-averaged: hits over
// all predicted sentences, where a hit is a sentence in any gold group.
SelectionPrf selection_prf(std::span<const Claim> gold,
                           std::span<const Verdict> predicted, std::size_t m);

EvalReport evaluate(std::span<const Claim> gold, std::span<const Verdict> predicted,
                    std::size_t m = 5);

nlohmann::json report_to_json(const EvalReport& report, bool include_per_claim = false);
// Aligned two-column text table of the headline metrics.
std::string format_report_table(const EvalReport& report);

}  // namespace mla

#endif  // MLA_EVALUATION_HPP_
