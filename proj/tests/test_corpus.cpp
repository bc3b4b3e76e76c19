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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "mla/corpus.hpp"
#include "mla/errors.hpp"

using namespace mla;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  void write(const std::string& file, const std::string& text) const {
    std::ofstream(path / file) << text;
  }
};

Corpus small_corpus() {
  return Corpus({{"Amber_River", {"Amber River flows north.", "It borders Lisbon."}},
                 {"Lisbon", {"Lisbon is a city."}}},
                {{1, "Amber River flows north.", Label::Supports, {{{"Amber_River", 0}}}},
                 {2, "Lisbon is a river.", Label::Refutes,
                  {{{"Lisbon", 0}}, {{"Lisbon", 0}, {"Amber_River", 1}}}},
                 {3, "Amber River is old.", Label::NotEnoughInfo, {}},
                 {4, "Unlabeled claim.", std::nullopt, {}}},
                {{1, {"Amber_River", "Lisbon"}}, {2, {"Lisbon"}}, {3, {"Amber_River"}}});
}

}  // namespace

TEST_CASE("labels and titles") {
  for (Label l : kAllLabels) {
    CHECK(parse_label(label_name(l)) == l);
    CHECK(parse_label(std::string(1, label_letter(l))) == l);
  }
  CHECK(label_name(Label::NotEnoughInfo) == "NOT ENOUGH INFO");
  CHECK_FALSE(parse_label("MAYBE").has_value());
  CHECK(title_text("Amber_River") == "Amber River");
  const Document d{"Amber_River", {"It flows north."}};
  CHECK(prefixed_sentence(d, 0) == "Amber River : It flows north.");
}

TEST_CASE("claim evidence helpers") {
  const Claim c{1, "x", Label::Supports, {{{"B", 2}, {"A", 1}}, {{"A", 1}, {"C", 0}}}};
  CHECK(c.evidence_sentences() == std::vector<SentenceRef>{{"A", 1}, {"B", 2}, {"C", 0}});
  CHECK(c.gold_doc_ids() == std::vector<std::string>{"B", "A", "C"});
}

TEST_CASE("corpus lookups and validation") {
  const Corpus corpus = small_corpus();
  CHECK_NOTHROW(corpus.validate());
  CHECK(corpus.find_document("Lisbon") != nullptr);
  CHECK(corpus.find_document("Porto") == nullptr);
  CHECK(corpus.find_claim(2)->text == "Lisbon is a river.");
  CHECK(corpus.retrieved(1).size() == 2);
  CHECK(corpus.retrieved(99).empty());
  CHECK(corpus.resolves({"Amber_River", 1}));
  CHECK_FALSE(corpus.resolves({"Amber_River", 2}));

  const Corpus broken({{"A", {"a"}}},
                      {{1, "x", Label::Supports, {{{"A", 0}, {"Missing", 0}}}},
                       {2, "y", Label::NotEnoughInfo, {{{"A", 0}}}},
                       {3, "z", Label::Refutes, {{{"A", 4}}}}},
                      {{1, {"Nowhere"}}});
  try {
    broken.validate();
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.offenders().size() == 4);
    CHECK(std::string(e.what()).find("Missing") != std::string::npos);
  }
}

TEST_CASE("load_corpus") {
  TempDir dir("mla_test_corpus_load");
  SUBCASE("empty claim file") {
    dir.write("documents.jsonl", "{\"doc_id\": \"A\", \"sentences\": [\"a\"]}\n");
    dir.write("claims.jsonl", "");
    dir.write("retrievals.jsonl", "");
    const Corpus c = load_corpus(dir.path);
    CHECK(c.claims().empty());
    CHECK(c.documents().size() == 1);
  }
  SUBCASE("dangling reference") {
    dir.write("documents.jsonl", "{\"doc_id\": \"A\", \"sentences\": [\"a\"]}\n");
    dir.write("claims.jsonl",
              "{\"id\": 1, \"claim\": \"x\", \"label\": \"SUPPORTS\", "
              "\"evidence\": [[[\"B\", 0]]]}\n");
    dir.write("retrievals.jsonl", "");
    CHECK_THROWS_AS(load_corpus(dir.path), ValidationError);
  }
  SUBCASE("malformed record reports its line") {
    dir.write("documents.jsonl",
              "{\"doc_id\": \"A\", \"sentences\": [\"a\"]}\n\n{\"doc_id\": 5}\n");
    try {
      load_documents(dir.path / "documents.jsonl");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    dir.write("claims.jsonl", "{\"id\": 1, \"claim\": \"x\", \"label\": \"PERHAPS\"}\n");
    CHECK_THROWS_AS(load_claims(dir.path / "claims.jsonl"), ParseError);
    dir.write("claims.jsonl", "not json\n");
    CHECK_THROWS_AS(load_claims(dir.path / "claims.jsonl"), ParseError);
  }
  SUBCASE("four-element evidence entries") {
    dir.write("claims.jsonl",
              "{\"id\": 7, \"claim\": \"x\", \"label\": \"REFUTES\", \"evidence\": "
              "[[[101, 202, \"A\", 3], [101, 203, \"B\", 0]]]}\n"
              "{\"id\": 8, \"claim\": \"y\", \"label\": \"NOT ENOUGH INFO\", \"evidence\": "
              "[[[101, 202, null, null]]]}\n");
    const auto claims = load_claims(dir.path / "claims.jsonl");
    REQUIRE(claims.size() == 2);
    CHECK(claims[0].evidence_groups ==
          std::vector<EvidenceGroup>{{{"A", 3}, {"B", 0}}});
    CHECK(claims[1].evidence_groups.empty());
  }
}

TEST_CASE("save and load are inverse") {
  TempDir dir("mla_test_corpus_roundtrip");
  const Corpus corpus = small_corpus();
  save_corpus(corpus, dir.path);
  const Corpus back = load_corpus(dir.path);
  CHECK(back.documents() == corpus.documents());
  CHECK(back.claims() == corpus.claims());
  CHECK(back.retrievals() == corpus.retrievals());

  const Corpus synth = generate_synthetic({.n_claims = 60, .seed = 4});
  save_corpus(synth, dir.path);
  const Corpus synth_back = load_corpus(dir.path);
  CHECK(synth_back.claims() == synth.claims());
  CHECK(synth_back.documents() == synth.documents());
  CHECK(synth_back.retrievals() == synth.retrievals());
}

TEST_CASE("synthetic generation is reproducible") {
  const SyntheticSpec spec{.n_claims = 200, .evidence_pattern = EvidencePattern::Mixed,
                           .refute_style = RefuteStyle::Mixed, .seed = 99};
  const Corpus a = generate_synthetic(spec), b = generate_synthetic(spec);
  CHECK(a.documents() == b.documents());
  CHECK(a.claims() == b.claims());
  CHECK(a.retrievals() == b.retrievals());
  SyntheticSpec other = spec;
  other.seed = 100;
  CHECK_FALSE(generate_synthetic(other).claims() == a.claims());
}

TEST_CASE("synthetic corpus structure") {
  for (auto pattern : {EvidencePattern::Single, EvidencePattern::TwoSentence}) {
    const Corpus c = generate_synthetic({.n_claims = 300, .evidence_pattern = pattern, .seed = 5});
    CHECK_NOTHROW(c.validate());
    const std::size_t size = pattern == EvidencePattern::Single ? 1 : 2;
    std::set<std::string> texts;
    for (const auto& claim : c.claims()) {
      texts.insert(claim.text);
      const auto retrieved = c.retrieved(claim.id);
      CHECK(retrieved.size() == 3);
      if (claim.label == Label::NotEnoughInfo) {
        CHECK(claim.evidence_groups.empty());
        continue;
      }
      REQUIRE(claim.evidence_groups.size() == 1);
      CHECK(claim.evidence_groups[0].size() == size);
      for (const auto& ref : claim.evidence_groups[0]) {
        CHECK(std::find(retrieved.begin(), retrieved.end(), ref.doc_id) != retrieved.end());
      }
      if (claim.label == Label::Supports && size == 1) {
        // the claim restates the evidence sentence's fact
        const auto& ref = claim.evidence_groups[0][0];
        const std::string& sentence = c.find_document(ref.doc_id)->sentences[ref.sent_idx];
        const std::string expected =
            ref.sent_idx == 0 ? sentence : title_text(ref.doc_id) + sentence.substr(2);
        CHECK(claim.text == expected);
      }
    }
    CHECK(texts.size() > 100);
  }
}

TEST_CASE("synthetic label proportions") {
  const double ratios[] = {80035.0 / 145469.0, 29775.0 / 145469.0, 35659.0 / 145469.0};
  CHECK(ratios[0] == doctest::Approx(0.5502).epsilon(1e-3));
  for (std::size_t n : {3, 10, 100, 1000, 1234}) {
    const Corpus c = generate_synthetic({.n_claims = n, .n_docs = 8, .seed = 1});
    const auto stats = corpus_stats(c.claims());
    const auto planted = synthetic_label_counts({.n_claims = n});
    CHECK(stats.label_counts == planted);
    std::size_t total = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      total += stats.label_counts[i];
      CHECK(stats.label_counts[i] >= 1);
      CHECK(std::abs(static_cast<double>(stats.label_counts[i]) - ratios[i] * n) <= 1.0);
    }
    CHECK(total == n);
  }
  CHECK_THROWS_AS(synthetic_label_counts({.n_claims = 2}), ContractError);
}

TEST_CASE("corpus statistics") {
  const auto empty = corpus_stats({});
  CHECK(empty.label_counts == std::array<std::size_t, 3>{0, 0, 0});
  CHECK(empty.group_sizes.empty());

  const Corpus c = small_corpus();
  const auto stats = corpus_stats(c.claims());
  CHECK(stats.label_counts == std::array<std::size_t, 3>{1, 1, 1});
  CHECK(stats.unlabeled == 1);
  CHECK(stats.group_sizes == std::map<std::size_t, std::size_t>{{1, 2}, {2, 1}});

  std::vector<Claim> fever;
  const std::size_t counts[] = {80035, 29775, 35659};
  for (std::size_t l = 0; l < 3; ++l) {
    for (std::size_t i = 0; i < counts[l]; ++i) fever.push_back({0, "", kAllLabels[l], {}});
  }
  CHECK(corpus_stats(fever).label_counts == std::array<std::size_t, 3>{80035, 29775, 35659});
}

TEST_CASE("held-out split") {
  const Corpus c = generate_synthetic({.n_claims = 1000, .seed = 2});
  const auto split = split_claims(c.claims(), 0.2, 7);
  CHECK(split.heldout.size() == 200);
  CHECK(split.train.size() == 800);
  std::set<std::int64_t> ids;
  for (const auto& x : split.train) ids.insert(x.id);
  for (const auto& x : split.heldout) CHECK(ids.insert(x.id).second);
  CHECK(ids.size() == 1000);
  const auto again = split_claims(c.claims(), 0.2, 7);
  CHECK(again.heldout == split.heldout);
  CHECK_THROWS_AS(split_claims(c.claims(), 1.0, 7), ContractError);
}
