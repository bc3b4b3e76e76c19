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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "mla/grad_check.hpp"
#include "mla/veracity.hpp"
#include "test_util.hpp"

using namespace mla;
using mla::testing::bitwise_equal;

namespace {

const std::array<std::size_t, 3> kFeverCounts = {80035, 29775, 35659};

Candidate cand(const std::string& doc, std::size_t idx) {
  return {{doc, idx}, doc + " : sentence " + std::to_string(idx)};
}

ScoredSentence scored(const std::string& doc, std::size_t idx, double score) {
  return {{doc, idx}, doc + " : sentence " + std::to_string(idx), score};
}

std::vector<SentenceRef> refs_of(const EvidenceSet& ev) {
  std::vector<SentenceRef> out;
  for (const auto& s : ev.sentences) out.push_back(s.ref);
  return out;
}

MlaConfig toy_config(std::size_t vocab_size) {
  MlaConfig c;
  c.encoder.vocab_size = vocab_size;
  c.encoder.width = 16;
  c.encoder.heads = 2;
  c.encoder.depth = 2;
  c.encoder.max_len = 8;
  c.encoder.pad_to_max_len = true;
  return c;
}

struct ModelFixture {
  ParamSet params;
  std::shared_ptr<const Vocabulary> vocab;
  std::unique_ptr<MlaModel> model;
  explicit ModelFixture(const std::function<void(MlaConfig&)>& tweak = {},
                        std::uint64_t seed = 7) {
    const std::vector<std::string> texts = {"the river flows north .",
                                            "river : it borders a lake .",
                                            "lake : the town was founded late ."};
    vocab = std::make_shared<const Vocabulary>(Vocabulary::build(texts));
    MlaConfig config = toy_config(vocab->size());
    if (tweak) tweak(config);
    model = std::make_unique<MlaModel>(params, "mla", config, vocab);
    Rng rng(seed);
    initialize_parameters(params, rng, 0.3);
  }
};

EvidenceSet toy_set(std::size_t n) {
  EvidenceSet ev;
  ev.claim_id = 1;
  ev.claim = "the river flows north";
  ev.y = Label::Refutes;
  ev.has_z_labels = true;
  const char* texts[] = {"river : it borders a lake .", "lake : the town was founded",
                         "river : the lake flows", "town : it was late .",
                         "lake : river north borders"};
  for (std::size_t j = 0; j < n; ++j) {
    ev.sentences.push_back({{"d" + std::to_string(j), j}, texts[j % 5], j == 0 ? 1 : -1});
  }
  return ev;
}

}  // namespace

TEST_CASE("evidence list worked example") {
  const Claim claim{1, "c", Label::Supports, {}};
  const std::vector<Candidate> truth = {cand("t", 1), cand("t", 2)};
  const std::vector<ScoredSentence> predicted = {scored("p", 1, .9), scored("p", 2, .8),
                                                 scored("t", 1, .7), scored("p", 3, .6),
                                                 scored("p", 4, .5)};
  const auto ev = build_evidence_set(claim, truth, predicted, 5, true);
  CHECK(refs_of(ev) == std::vector<SentenceRef>{{"t", 1}, {"t", 2}, {"p", 1}, {"p", 2}, {"p", 3}});
  CHECK(ev.sentences[0].z == 1);
  CHECK(ev.sentences[1].z == 1);
  CHECK(ev.sentences[2].z == -1);
  CHECK(ev.has_z_labels);
  CHECK(ev.y == Label::Supports);

  const auto test = build_evidence_set(claim, truth, predicted, 5, false);
  CHECK(test.sentences.size() == 5);
  CHECK(test.sentences[0].ref == SentenceRef{"p", 1});
  CHECK(test.sentences[2].ref == SentenceRef{"t", 1});
  CHECK_FALSE(test.has_z_labels);
}

TEST_CASE("evidence list edge cases") {
  const Claim nei{2, "c", Label::NotEnoughInfo, {}};
  std::vector<ScoredSentence> predicted;
  for (std::size_t i = 0; i < 7; ++i) predicted.push_back(scored("p", i, 1.0 - i * 0.1));
  const auto ev = build_evidence_set(nei, {}, predicted, 5, true);
  CHECK(ev.sentences.size() == 5);
  CHECK(ev.sentences[4].ref == SentenceRef{"p", 4});

  std::vector<Candidate> six;
  for (std::size_t i = 0; i < 6; ++i) six.push_back(cand("t", i));
  const auto truncated = build_evidence_set(nei, six, predicted, 5, true);
  CHECK(refs_of(truncated) ==
        std::vector<SentenceRef>{{"t", 0}, {"t", 1}, {"t", 2}, {"t", 3}, {"t", 4}});

  CHECK_THROWS_AS(build_evidence_set(nei, {}, {}, 5, true), ContractError);
  CHECK_THROWS_AS(build_evidence_set(nei, six, predicted, 0, true), ContractError);
}

TEST_CASE("evidence list matches a dedup-truncate oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const Claim claim{trial, "c", Label::Supports, {}};
    std::vector<Candidate> truth;
    std::vector<ScoredSentence> predicted;
    for (std::size_t i = 0; i < rng.uniform_index(5); ++i) {
      truth.push_back(cand("d" + std::to_string(rng.uniform_index(3)), rng.uniform_index(4)));
    }
    for (std::size_t i = 0; i < 1 + rng.uniform_index(8); ++i) {
      predicted.push_back(
          scored("d" + std::to_string(rng.uniform_index(3)), rng.uniform_index(4), 0.5));
    }
    const std::size_t m = 1 + rng.uniform_index(6);
    std::vector<SentenceRef> oracle;
    for (const auto& t : truth) {
      if (std::find(oracle.begin(), oracle.end(), t.ref) == oracle.end()) oracle.push_back(t.ref);
    }
    for (const auto& p : predicted) {
      if (std::find(oracle.begin(), oracle.end(), p.ref) == oracle.end()) oracle.push_back(p.ref);
    }
    if (oracle.size() > m) oracle.resize(m);
    CHECK(refs_of(build_evidence_set(claim, truth, predicted, m, true)) == oracle);
  }
}

TEST_CASE("concatenated token length") {
  CHECK(concatenated_length(128, 5) == 640);
  CHECK(concatenated_length(32, 5) == 160);
}

TEST_CASE("class weights") {
  const auto w = compute_class_weights(kFeverCounts);
  CHECK(w[Label::Supports] == doctest::Approx(0.16857).epsilon(1e-4));
  CHECK(w[Label::Refutes] == doctest::Approx(0.45310).epsilon(1e-4));
  CHECK(w[Label::NotEnoughInfo] == doctest::Approx(0.37834).epsilon(1e-4));
  // unnormalized N / (3 N_y)
  const double n = 80035.0 + 29775.0 + 35659.0;
  const double raw[] = {n / (3 * 80035.0), n / (3 * 29775.0), n / (3 * 35659.0)};
  CHECK(raw[0] == doctest::Approx(0.60586).epsilon(1e-4));
  CHECK(raw[1] == doctest::Approx(1.62853).epsilon(1e-4));
  CHECK(raw[2] == doctest::Approx(1.35982).epsilon(1e-4));
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(w.beta[i] == doctest::Approx(raw[i] / (raw[0] + raw[1] + raw[2])).epsilon(1e-14));
  }

  const auto eq = compute_class_weights({7, 7, 7});
  for (double b : eq.beta) CHECK(b == doctest::Approx(1.0 / 3).epsilon(1e-15));

  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const auto r = compute_class_weights(
        {1 + rng.uniform_index(100000), 1 + rng.uniform_index(100000), 1 + rng.uniform_index(10)});
    CHECK(std::abs(r.beta[0] + r.beta[1] + r.beta[2] - 1.0) <= 1e-12);
    for (double b : r.beta) CHECK(b >= 0.0);
  }
  CHECK_THROWS_AS(compute_class_weights({5, 0, 5}), ContractError);
}

TEST_CASE("prediction loss examples") {
  const Tensor uniform = Tensor::row({0.0, 0.0, 0.0});
  CHECK(prediction_loss(uniform, Label::Supports, ClassWeights{}).item() ==
        doctest::Approx(0.366204).epsilon(1e-6));
  const auto w = compute_class_weights(kFeverCounts);
  CHECK(prediction_loss(uniform, Label::Refutes, w).item() ==
        doctest::Approx(0.497795).epsilon(1e-5));
  CHECK(prediction_loss(uniform, Label::Refutes, w).item() >
        prediction_loss(uniform, Label::Supports, w).item());
  CHECK(prediction_loss(Tensor::row({900.0, 0.0, 0.0}), Label::Supports, w).item() ==
        doctest::Approx(0.0));
}

TEST_CASE("predict_label") {
  const double a[] = {0.5, 0.3, 0.2};
  CHECK(predict_label(a) == Label::Supports);
  const double tie[] = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK(predict_label(tie) == Label::Supports);
  const double rn[] = {0.2, 0.4, 0.4};
  CHECK(predict_label(rn) == Label::Refutes);
  const double n[] = {0.1, 0.2, 0.7};
  CHECK(predict_label(n) == Label::NotEnoughInfo);

  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> logits = {rng.normal(), rng.normal(), rng.normal()};
    const double shift = rng.normal(0, 50);
    std::vector<double> shifted = logits;
    for (auto& v : shifted) v += shift;
    CHECK(predict_label(softmax(Tensor::row(logits)).data()) ==
          predict_label(softmax(Tensor::row(shifted)).data()));
  }
}

TEST_CASE("forward shapes and distributions") {
  ModelFixture f;
  for (std::size_t n : {1, 2, 5}) {
    const auto out = f.model->forward(toy_set(n));
    CHECK(out.probs.shape() == Shape{1, 3});
    CHECK(out.s.shape() == Shape{n, 1});
    CHECK(out.a.shape() == Shape{1, 16});
    CHECK(out.aux_logits.shape() == Shape{n, 2});
    CHECK(std::abs(out.probs[0] + out.probs[1] + out.probs[2] - 1.0) <= 1e-12);
    for (double s : out.s.data()) CHECK((s >= 0.0 && s <= 1.0));
  }
  EvidenceSet empty = toy_set(1);
  empty.sentences.clear();
  CHECK_THROWS_AS(f.model->forward(empty), ContractError);
}

TEST_CASE("attention layers do not share parameters") {
  ModelFixture f;
  std::set<const void*> storage;
  for (const auto& p : f.params.entries()) CHECK(storage.insert(p.value.node().get()).second);
  for (const char* layer : {"token_attn", "sentence_attn", "cross_attn"}) {
    CHECK(f.params.find(std::string("mla.") + layer + ".wq") != nullptr);
  }
  CHECK(f.model->aux_prefix() == "mla.aux_head");
}

TEST_CASE("joint loss composition") {
  ModelFixture f;
  const auto ev = toy_set(5);
  const ClassWeights w = compute_class_weights(kFeverCounts);
  const auto out = f.model->forward(ev);
  const double pred = prediction_loss(out.logits, *ev.y, w).item();
  CHECK(joint_loss(out, ev, w, 0.0).item() == pred);

  for (const char* name : {"mla.aux_head.w2", "mla.aux_head.b2"}) {
    auto d = f.params.find(name)->value.mutable_data();
    std::fill(d.begin(), d.end(), 0.0);
  }
  const auto flat = f.model->forward(ev);
  for (double s : flat.s.data()) CHECK(s == 0.5);
  CHECK(joint_loss(flat, ev, w, 1.0).item() ==
        doctest::Approx(prediction_loss(flat.logits, *ev.y, w).item() + 5 * std::numbers::ln2)
            .epsilon(1e-12));

  EvidenceSet unlabeled = ev;
  unlabeled.has_z_labels = false;
  CHECK_THROWS_AS(joint_loss(out, unlabeled, w, 1.0), ContractError);
  CHECK_NOTHROW(joint_loss(out, unlabeled, w, 0.0));
  EvidenceSet no_y = ev;
  no_y.y.reset();
  CHECK_THROWS_AS(joint_loss(out, no_y, w, 1.0), ContractError);
}

TEST_CASE("joint loss gradient check on a toy instance") {
  ModelFixture f;
  const auto ev = toy_set(2);
  const ClassWeights w = compute_class_weights(kFeverCounts);
  auto inputs = f.params.tensors();
  const auto r = grad_check_all(
      [&] { return joint_loss(f.model->forward(ev), ev, w, 1.0); }, inputs);
  INFO("worst input " << f.params.entries()[r.worst_input].name);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("verdict is invariant to sentence order without positional encodings") {
  const std::vector<std::string> texts = {"the river flows north .",
                                          "river : it borders a lake ."};
  auto vocab = std::make_shared<const Vocabulary>(Vocabulary::build(texts));
  for (auto gate : {GateStrategy::ValueOnly, GateStrategy::KeyAndValue,
                    GateStrategy::DotProductBias}) {
    MlaConfig c = toy_config(vocab->size());
    c.token_pe = false;
    c.gate = gate;
    ParamSet params;
    MlaModel model(params, "mla", c, vocab);
    Rng rng(11);
    initialize_parameters(params, rng, 0.3);
    const auto ev = toy_set(4);
    EvidenceSet perm = ev;
    std::swap(perm.sentences[0], perm.sentences[3]);
    std::swap(perm.sentences[1], perm.sentences[2]);
    const auto a = model.forward(ev), b = model.forward(perm);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(a.probs[i] - b.probs[i]) <= 1e-9);
    CHECK(a.s[0] == doctest::Approx(b.s[3]).epsilon(1e-12));
    const ClassWeights w;
    CHECK(joint_loss(a, ev, w, 1.0).item() ==
          doctest::Approx(joint_loss(b, perm, w, 1.0).item()).epsilon(1e-9));
  }
}

TEST_CASE("detached gate blocks verdict gradients into the auxiliary head") {
  for (bool detach : {false, true}) {
    ModelFixture f([&](MlaConfig& c) { c.detach_gate = detach; });
    const auto ev = toy_set(3);
    joint_loss(f.model->forward(ev), ev, ClassWeights{}, 0.0).backward();
    double norm = 0.0;
    for (double g : f.params.find("mla.aux_head.w2")->value.grad()) norm += g * g;
    if (detach) {
      CHECK(norm == 0.0);
    } else {
      CHECK(norm > 0.0);
    }
  }
}

TEST_CASE("dropout only acts in training") {
  ModelFixture f;
  const auto ev = toy_set(3);
  const auto eval_a = f.model->forward(ev);
  Rng rng(1);
  const auto eval_b = f.model->forward(ev, {0.1, &rng, false});
  CHECK(bitwise_equal(eval_a.probs, eval_b.probs));
  const auto train = f.model->forward(ev, {0.1, &rng, true});
  CHECK_FALSE(bitwise_equal(eval_a.probs, train.probs));
}

TEST_CASE("verify and verdict files") {
  ModelFixture f;
  const auto ev = toy_set(3);
  const Verdict v = verify(*f.model, ev);
  CHECK(v.claim_id == 1);
  CHECK(v.predicted_evidence == refs_of(ev));
  CHECK(v.predicted_label == predict_label(v.probabilities));

  const auto dir = std::filesystem::temp_directory_path() / "mla_test_verdicts";
  std::filesystem::create_directories(dir);
  const std::vector<Verdict> all = {v, {9, Label::NotEnoughInfo, {}, {0.1, 0.2, 0.7}}};
  save_verdicts(dir / "v.jsonl", all);
  const auto back = load_verdicts(dir / "v.jsonl");
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].claim_id == all[i].claim_id);
    CHECK(back[i].predicted_label == all[i].predicted_label);
    CHECK(back[i].predicted_evidence == all[i].predicted_evidence);
    CHECK(back[i].probabilities == all[i].probabilities);
  }
  std::ofstream(dir / "bad.jsonl") << "{\"claim_id\": 1}\n";
  CHECK_THROWS_AS(load_verdicts(dir / "bad.jsonl"), ParseError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("true evidence follows group order") {
  Corpus corpus({{"A", {"a0", "a1", "a2"}}, {"B", {"b0"}}},
                {{1, "c", Label::Supports, {{{"B", 0}, {"A", 2}}, {{"A", 2}, {"A", 0}}}}}, {});
  const auto t = true_evidence(corpus.claims()[0], corpus);
  REQUIRE(t.size() == 3);
  CHECK(t[0].ref == SentenceRef{"B", 0});
  CHECK(t[1].ref == SentenceRef{"A", 2});
  CHECK(t[2].ref == SentenceRef{"A", 0});
  CHECK(t[1].text == "A : a2");
}
