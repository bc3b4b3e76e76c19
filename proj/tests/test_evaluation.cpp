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

#include <string>
#include <vector>

#include "doctest.h"
#include "mla/evaluation.hpp"
#include "scorer_oracle.hpp"

using namespace mla;
using mla::testing::brute_force_scores;
using mla::testing::random_instance;

namespace {

Claim gold_claim(std::int64_t id, Label label, std::vector<EvidenceGroup> groups = {}) {
  return {id, "claim", label, std::move(groups)};
}

Verdict verdict(std::int64_t id, Label label, std::vector<SentenceRef> evidence = {}) {
  return {id, label, std::move(evidence), {}};
}

}  // namespace

TEST_CASE("label accuracy") {
  const std::vector<Claim> gold = {gold_claim(1, Label::Supports), gold_claim(2, Label::Refutes),
                                   gold_claim(3, Label::NotEnoughInfo)};
  std::vector<Verdict> pred = {verdict(1, Label::Supports), verdict(2, Label::Refutes),
                               verdict(3, Label::NotEnoughInfo)};
  CHECK(label_accuracy(gold, pred) == 1.0);
  pred[1].predicted_label = Label::Supports;
  CHECK(label_accuracy(gold, pred) == doctest::Approx(0.6667).epsilon(1e-4));
}

TEST_CASE("claim id mismatches are rejected") {
  const std::vector<Claim> gold = {gold_claim(1, Label::Supports), gold_claim(2, Label::Refutes)};
  const std::vector<Verdict> missing = {verdict(1, Label::Supports)};
  CHECK_THROWS_AS(label_accuracy(gold, missing), ValidationError);
  const std::vector<Verdict> extra = {verdict(1, Label::Supports), verdict(2, Label::Refutes),
                                      verdict(3, Label::Refutes)};
  CHECK_THROWS_AS(fever_score(gold, extra, 5), ValidationError);
  const std::vector<Verdict> dup = {verdict(1, Label::Supports), verdict(1, Label::Supports),
                                    verdict(2, Label::Refutes)};
  CHECK_THROWS_AS(selection_prf(gold, dup, 5), ValidationError);
  const std::vector<Claim> unlabeled = {{1, "x", std::nullopt, {}}};
  CHECK_THROWS_AS(label_accuracy(unlabeled, missing), ValidationError);
}

TEST_CASE("fever score examples") {
  const EvidenceGroup pair = {{"A", 0}, {"A", 3}};
  const std::vector<Claim> gold = {gold_claim(1, Label::Supports, {pair}),
                                   gold_claim(2, Label::Refutes, {pair, {{"B", 1}}}),
                                   gold_claim(3, Label::NotEnoughInfo)};
  std::vector<Verdict> pred = {verdict(1, Label::Supports, {{"A", 3}, {"X", 0}, {"A", 0}}),
                               verdict(2, Label::Refutes, {{"A", 0}}),
                               verdict(3, Label::NotEnoughInfo, {{"Q", 9}})};
  auto report = evaluate(gold, pred, 5);
  CHECK(report.per_claim[0].evidence_complete);
  CHECK_FALSE(report.per_claim[1].evidence_complete);  // half a group
  CHECK(report.per_claim[2].evidence_complete);
  CHECK(report.fever == doctest::Approx(2.0 / 3));

  pred[1].predicted_evidence.push_back({"B", 1});  // second group covered
  CHECK(fever_score(gold, pred, 5) == 1.0);
  pred[2].predicted_label = Label::Supports;
  CHECK(fever_score(gold, pred, 5) == doctest::Approx(2.0 / 3));
}

TEST_CASE("evidence beyond m is cut with a warning") {
  const std::vector<Claim> gold = {gold_claim(1, Label::Supports, {{{"A", 5}}})};
  std::vector<SentenceRef> six;
  for (std::size_t i = 0; i < 6; ++i) six.push_back({"A", i});
  const std::vector<Verdict> pred = {verdict(1, Label::Supports, six)};
  std::vector<std::string> warnings;
  CHECK(fever_score(gold, pred, 5, &warnings) == 0.0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("claim 1") != std::string::npos);
  CHECK(fever_score(gold, pred, 6) == 1.0);
}

TEST_CASE("selection precision recall f1") {
  const EvidenceGroup group = {{"A", 0}, {"A", 1}};
  SUBCASE("exactly one full group") {
    const std::vector<Claim> gold = {gold_claim(1, Label::Supports, {group})};
    const std::vector<Verdict> pred = {verdict(1, Label::Supports, group)};
    const auto prf = selection_prf(gold, pred, 5);
    CHECK(prf.precision == 1.0);
    CHECK(prf.recall_at_m == 1.0);
    CHECK(prf.f1 == 1.0);
  }
  SUBCASE("empty predictions for a verifiable claim") {
    const std::vector<Claim> gold = {gold_claim(1, Label::Supports, {group}),
                                     gold_claim(2, Label::Refutes, {{{"B", 0}}})};
    const std::vector<Verdict> pred = {verdict(1, Label::Supports),
                                       verdict(2, Label::Refutes, {{"B", 0}, {"C", 0}})};
    const auto prf = selection_prf(gold, pred, 5);
    CHECK(prf.precision == 0.5);
    CHECK(prf.recall_at_m == 0.5);
    CHECK(prf.f1 == doctest::Approx(0.5));
  }
  SUBCASE("NOT ENOUGH INFO claims are left out") {
    const std::vector<Claim> gold = {gold_claim(1, Label::Supports, {group}),
                                     gold_claim(2, Label::NotEnoughInfo)};
    const std::vector<Verdict> pred = {verdict(1, Label::Supports, group),
                                       verdict(2, Label::NotEnoughInfo, {{"Z", 0}, {"Z", 1}})};
    const auto prf = selection_prf(gold, pred, 5);
    CHECK(prf.precision == 1.0);
    CHECK(prf.recall_at_m == 1.0);
  }
  SUBCASE("micro averaging") {
    const std::vector<Claim> gold = {gold_claim(1, Label::Supports, {{{"A", 0}}}),
                                     gold_claim(2, Label::Supports, {{{"B", 0}}})};
    const std::vector<Verdict> pred = {
        verdict(1, Label::Supports, {{"A", 0}}),
        verdict(2, Label::Supports, {{"B", 0}, {"X", 0}, {"X", 1}, {"X", 2}})};
    // 2 hits over 5 predictions; the macro mean would be 0.625
    CHECK(selection_prf(gold, pred, 5).precision == doctest::Approx(0.4));
  }
}

TEST_CASE("scorer matches the brute-force recount") {
  Rng rng(2021);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto inst = random_instance(rng);
    const std::size_t m = 1 + rng.uniform_index(6);
    const auto want = brute_force_scores(inst, m);
    const auto report = evaluate(inst.gold, inst.predicted, m);
    CHECK(report.la == want.la);
    CHECK(report.fever == want.fever);
    CHECK(report.precision == want.precision);
    CHECK(report.recall_at_m == want.recall);
    CHECK(report.f1 == want.f1);
    CHECK(report.fever <= report.la);
  }
}

TEST_CASE("scorer properties") {
  Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = random_instance(rng);
    const auto base = evaluate(inst.gold, inst.predicted, 5);

    auto shuffled = inst;
    rng.shuffle(shuffled.gold);
    rng.shuffle(shuffled.predicted);
    const auto perm = evaluate(shuffled.gold, shuffled.predicted, 5);
    CHECK(perm.la == base.la);
    CHECK(perm.fever == base.fever);
    CHECK(perm.precision == base.precision);
    CHECK(perm.recall_at_m == base.recall_at_m);

    // an extra wrong sentence can only push evidence out of the top m
    auto padded = inst;
    auto& v = padded.predicted[rng.uniform_index(padded.predicted.size())];
    v.predicted_evidence.insert(
        v.predicted_evidence.begin() + static_cast<std::ptrdiff_t>(
                                           rng.uniform_index(v.predicted_evidence.size() + 1)),
        SentenceRef{"Wrong", 99});
    const auto more = evaluate(padded.gold, padded.predicted, 5);
    CHECK(more.recall_at_m <= base.recall_at_m);
    CHECK(more.fever <= base.fever);
  }
}

TEST_CASE("report rendering") {
  const std::vector<Claim> gold = {gold_claim(1, Label::Supports, {{{"A", 0}}})};
  const std::vector<Verdict> pred = {verdict(1, Label::Supports, {{"A", 0}})};
  const auto report = evaluate(gold, pred, 5);
  const auto j = report_to_json(report, true);
  CHECK(j["label_accuracy"] == 1.0);
  CHECK(j["per_claim"].size() == 1);
  CHECK_FALSE(report_to_json(report).contains("per_claim"));
  const auto table = format_report_table(report);
  CHECK(table.find("LA            100.00") != std::string::npos);
  CHECK(table.find("Recall@5") != std::string::npos);
}
