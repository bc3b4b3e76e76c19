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
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "doctest.h"
#include "mla/encoder.hpp"
#include "mla/grad_check.hpp"
#include "test_util.hpp"

using namespace mla;
using mla::testing::bitwise_equal;
using mla::testing::max_abs_diff;
using mla::testing::random_tensor;
using mla::testing::readout;

namespace {

std::shared_ptr<const Vocabulary> toy_vocab() {
  const std::vector<std::string> texts = {
      "Rabies is a foodborne illness.",
      "Amber River : Amber River flows through Lisbon.",
      "It borders Spain.", "The film was released in 2009 ."};
  return std::make_shared<const Vocabulary>(Vocabulary::build(texts));
}

EncoderConfig small_config(std::size_t width = 16, std::size_t max_len = 16) {
  EncoderConfig c;
  c.width = width;
  c.heads = 2;
  c.depth = 2;
  c.max_len = max_len;
  c.pad_to_max_len = true;
  return c;
}

struct Fixture {
  ParamSet params;
  std::shared_ptr<const Vocabulary> vocab = toy_vocab();
  SequenceEncoder encoder;
  explicit Fixture(EncoderConfig config = small_config(), std::uint64_t seed = 5)
      : encoder(params, "enc", config, vocab) {
    Rng rng(seed);
    initialize_parameters(params, rng, 0.5);
  }
};

}  // namespace

TEST_CASE("tokenizer examples") {
  const Vocabulary vocab;
  CHECK(tokenize("", vocab).empty());
  const auto toks = split_tokens("Rabies is a foodborne illness.");
  CHECK(toks == std::vector<std::string>{"rabies", "is", "a", "foodborne", "illness", "."});
  const auto v = toy_vocab();
  CHECK(tokenize("Rabies is a foodborne illness.", *v).size() == 6);
  CHECK(tokenize("Rabies is a foodborne illness.", *v) ==
        tokenize("Rabies is a foodborne illness.", *v));
  CHECK(split_tokens("Amber_River : it's (2009)") ==
        std::vector<std::string>{"amber", "_", "river", ":", "it", "'", "s", "(", "2009", ")"});
  CHECK(tokenize("zebra", *v) == std::vector<TokenId>{kUnkId});
}

TEST_CASE("vocabulary layout and file round trip") {
  const auto v = toy_vocab();
  CHECK(v->token(kPadId) == "[PAD]");
  CHECK(v->token(kClsId) == "[CLS]");
  CHECK(v->token(kSepId) == "[SEP]");
  CHECK(v->token(kUnkId) == "[UNK]");
  // most frequent first: the period ends every text
  CHECK(v->token(4) == ".");

  const auto dir = std::filesystem::temp_directory_path() / "mla_test_vocab";
  std::filesystem::create_directories(dir);
  v->save(dir / "vocab.txt");
  CHECK(Vocabulary::load(dir / "vocab.txt") == *v);

  std::ofstream(dir / "bad.txt") << "[PAD]\n[CLS]\n[UNK]\n[SEP]\n";
  CHECK_THROWS_AS(Vocabulary::load(dir / "bad.txt"), ParseError);
  std::ofstream(dir / "dup.txt") << "[PAD]\n[CLS]\n[SEP]\n[UNK]\nx\nx\n";
  try {
    Vocabulary::load(dir / "dup.txt");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 6);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("encoder config validation") {
  EncoderConfig c = small_config();
  c.vocab_size = 10;
  CHECK_NOTHROW(c.validate());
  EncoderConfig odd = c;
  odd.heads = 3;
  CHECK_THROWS_AS(odd.validate(), ContractError);
  EncoderConfig short_len = c;
  short_len.max_len = 3;
  CHECK_THROWS_AS(short_len.validate(), ContractError);
  EncoderConfig clash = c;
  clash.sep_id = clash.cls_id;
  CHECK_THROWS_AS(clash.validate(), ContractError);
  EncoderConfig big_id = c;
  big_id.sep_id = 10;
  CHECK_THROWS_AS(big_id.validate(), ContractError);
}

TEST_CASE("pair and single sequence layout") {
  const EncoderConfig c = small_config();
  const std::vector<TokenId> claim = {10, 11, 12};
  const std::vector<TokenId> sent = {20, 21};
  const auto pair = build_pair_sequence(claim, sent, c);
  CHECK(pair.ids == std::vector<TokenId>{1, 10, 11, 12, 2, 20, 21, 2, 0, 0, 0, 0, 0, 0, 0, 0});
  CHECK(pair.segment == std::vector<TokenId>{0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0});
  CHECK(pair.real_length() == 8);
  CHECK(std::count(pair.ids.begin(), pair.ids.end(), kSepId) == 2);
  for (std::size_t i = 0; i < pair.ids.size(); ++i) {
    CHECK(pair.attention_mask[i] == (pair.ids[i] != kPadId ? 1 : 0));
  }
  CHECK_FALSE(pair.truncated);

  const auto single = build_single_sequence(claim, c);
  CHECK(single.ids[0] == kClsId);
  CHECK(single.real_length() == 5);
  CHECK(single.ids.size() == 16);
}

TEST_CASE("overlong inputs are truncated and recorded") {
  EncoderConfig c = small_config();
  c.max_len = 8;
  const std::vector<TokenId> long_claim(12, 9);
  const std::vector<TokenId> sent = {20, 21};
  const auto pair = build_pair_sequence(long_claim, sent, c);
  CHECK(pair.truncated);
  CHECK(pair.ids.size() == 8);
  CHECK(std::count(pair.ids.begin(), pair.ids.end(), kSepId) == 2);
  CHECK(pair.ids[6] == kSepId);  // claim keeps L - 3 tokens, sentence none
  const std::vector<TokenId> claim = {9, 9, 9};
  const auto fitted = build_pair_sequence(claim, std::vector<TokenId>(10, 20), c);
  CHECK(fitted.truncated);
  CHECK(fitted.ids.size() == 8);
  CHECK(fitted.ids.back() == kSepId);

  Fixture f(c);
  const auto before = f.encoder.truncation_count();
  f.encoder.encode_single("rabies is a foodborne illness . it borders spain .");
  CHECK(f.encoder.truncation_count() == before + 1);
}

TEST_CASE("encode shapes and cls row") {
  Fixture f;
  const auto out = f.encoder.encode_pair("Rabies is a foodborne illness.", "It borders Spain.");
  CHECK(out.hidden.shape() == Shape{16, 16});
  CHECK(out.cls.shape() == Shape{1, 16});
  for (std::size_t j = 0; j < 16; ++j) CHECK(out.cls.at(0, j) == out.hidden.at(0, j));
  CHECK(f.encoder.encode_single("Rabies is a foodborne illness.").cls.shape() == Shape{1, 16});
  CHECK_THROWS_AS(f.encoder.encode_single("   "), ContractError);
}

TEST_CASE("different sentences give different cls vectors") {
  Fixture f;
  const auto a = f.encoder.encode_pair("Rabies is a foodborne illness.", "It borders Spain.");
  const auto b = f.encoder.encode_pair("Rabies is a foodborne illness.",
                                       "The film was released in 2009.");
  CHECK(max_abs_diff(a.cls, b.cls) > 1e-6);
  const auto c = f.encoder.encode_single("Rabies is a foodborne illness.");
  CHECK(max_abs_diff(a.cls, c.cls) > 1e-6);
}

TEST_CASE("encoding is deterministic") {
  Fixture a, b;
  const auto x = a.encoder.encode_pair("Amber River flows through Lisbon.", "It borders Spain.");
  const auto y = b.encoder.encode_pair("Amber River flows through Lisbon.", "It borders Spain.");
  CHECK(bitwise_equal(x.hidden, y.hidden));
  CHECK(bitwise_equal(a.encoder.encode_single("It borders Spain.").cls,
                      a.encoder.encode_single("It borders Spain.").cls));
}

TEST_CASE("padding does not change real rows") {
  EncoderConfig unpadded = small_config();
  unpadded.pad_to_max_len = false;
  Fixture padded_model(small_config()), plain_model(unpadded);
  const char* claim = "Rabies is a foodborne illness.";
  const char* sent = "It borders Spain.";
  const auto padded = padded_model.encoder.encode_pair(claim, sent);
  const auto plain = plain_model.encoder.encode_pair(claim, sent);
  REQUIRE(plain.hidden.rows() == 13);
  REQUIRE(padded.hidden.rows() == 16);
  for (std::size_t i = 0; i < plain.hidden.rows(); ++i) {
    for (std::size_t j = 0; j < 16; ++j) {
      CHECK(std::abs(plain.hidden.at(i, j) - padded.hidden.at(i, j)) <= 1e-12);
    }
  }
}

TEST_CASE("gradient check through encode_pair and a scalar head") {
  Fixture f(small_config(16, 8), 17);
  Rng rng(3);
  const Tensor w = random_tensor(rng, {1, 16});
  auto inputs = f.params.tensors();
  const auto r = grad_check_all(
      [&] { return readout(tanh(f.encoder.encode_pair("rabies is a", "it borders").cls), w); },
      inputs);
  CHECK(r.max_rel_error < 1e-4);
}
