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

// Small trainable transformer encoder: token + learned position + segment
// embeddings followed by residual self-attention blocks. The first output row
// (the [CLS] position) summarizes the sequence.

#ifndef MLA_ENCODER_HPP_
#define MLA_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mla/attention.hpp"
#include "mla/params.hpp"
#include "mla/tensor.hpp"

namespace mla {

using TokenId = std::int32_t;

inline constexpr TokenId kPadId = 0;
inline constexpr TokenId kClsId = 1;
inline constexpr TokenId kSepId = 2;
inline constexpr TokenId kUnkId = 3;
inline constexpr std::size_t kReservedTokens = 4;

// Lowercases ASCII letters, splits on whitespace, and emits every ASCII
// punctuation character as its own token.
std::vector<std::string> split_tokens(std::string_view text);

class Vocabulary {
 public:
  Vocabulary();  // reserved tokens only

  // Tokens ordered by descending frequency, ties alphabetical.
  static Vocabulary build(std::span<const std::string> texts,
                          std::size_t min_count = 1);
  // One token per line; line number is the id; the first four lines must be
  // the reserved [PAD], [CLS], [SEP], [UNK] tokens.
  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  TokenId id(std::string_view token) const;  // kUnkId if unknown
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  void append(std::string token);
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t width = 64;  // d_h
  std::size_t heads = 4;
  std::size_t depth = 2;
  std::size_t max_len = 32;  // L
  TokenId pad_id = kPadId;
  TokenId cls_id = kClsId;
  TokenId sep_id = kSepId;
  // When false, sequences stop at their last real token instead of being
  // padded to max_len. Non-pad rows are identical either way.
  bool pad_to_max_len = true;

  void validate() const;
};

struct TokenSequence {
  std::vector<TokenId> ids;
  std::vector<TokenId> segment;  // 0 = claim side, 1 = evidence side
  std::vector<std::uint8_t> attention_mask;  // 1 on non-pad positions
  bool truncated = false;

  std::size_t real_length() const;
};

// [CLS] claim [SEP] sentence [SEP] (+ padding). A claim longer than L-3 is
// cut to L-3 tokens; the sentence gets the remaining room.
TokenSequence build_pair_sequence(std::span<const TokenId> claim,
                                  std::span<const TokenId> sentence,
                                  const EncoderConfig& config);
// [CLS] claim [SEP] (+ padding).
TokenSequence build_single_sequence(std::span<const TokenId> claim,
                                    const EncoderConfig& config);

struct EncodedSequence {
  Tensor hidden;  // rows = sequence length, cols = width
  Tensor cls;     // 1 x width, row 0 of hidden
  std::vector<std::uint8_t> mask;
};

class SequenceEncoder {
 public:
  SequenceEncoder(ParamSet& params, const std::string& prefix,
                  EncoderConfig config,
                  std::shared_ptr<const Vocabulary> vocab);

  EncodedSequence encode(const TokenSequence& sequence,
                         const DropoutContext& dropout = {}) const;
  EncodedSequence encode_pair(std::string_view claim, std::string_view sentence,
                              const DropoutContext& dropout = {}) const;
  EncodedSequence encode_single(std::string_view claim,
                                const DropoutContext& dropout = {}) const;

  const EncoderConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return *vocab_; }
  std::shared_ptr<const Vocabulary> shared_vocab() const { return vocab_; }
  // Number of inputs cut to fit max_len so far.
  std::size_t truncation_count() const { return truncations_; }

 private:
  std::vector<TokenId> claim_tokens(std::string_view claim) const;

  EncoderConfig config_;
  std::shared_ptr<const Vocabulary> vocab_;
  Tensor token_embedding_;
  Tensor position_embedding_;
  Tensor segment_embedding_;
  std::vector<MhaParams> blocks_;
  mutable std::size_t truncations_ = 0;
};

}  // namespace mla

#endif  // MLA_ENCODER_HPP_
