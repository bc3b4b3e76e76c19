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

#include "mla/encoder.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>

namespace mla {

namespace {

constexpr const char* kReservedNames[kReservedTokens] = {"[PAD]", "[CLS]",
                                                         "[SEP]", "[UNK]"};

bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_punct(unsigned char c) {
  return (c >= 33 && c <= 47) || (c >= 58 && c <= 64) || (c >= 91 && c <= 96) ||
         (c >= 123 && c <= 126);
}

}  // namespace

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      word.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    }
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() {
  for (const char* name : kReservedNames) append(name);
}

void Vocabulary::append(std::string token) {
  index_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(std::span<const std::string> texts,
                             std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& text : texts) {
    for (auto& tok : split_tokens(text)) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  Vocabulary vocab;
  for (auto& [tok, n] : ranked) {
    if (n >= min_count && !vocab.index_.contains(tok)) vocab.append(tok);
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary " + path.string());
  Vocabulary vocab;
  vocab.tokens_.clear();
  vocab.index_.clear();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no <= kReservedTokens) {
      if (line != kReservedNames[line_no - 1]) {
        throw ParseError(path.string(), line_no,
                         std::string("expected reserved token ") +
                             kReservedNames[line_no - 1]);
      }
    } else if (line.empty() || vocab.index_.contains(line)) {
      throw ParseError(path.string(), line_no, "empty or duplicate token");
    }
    vocab.append(line);
  }
  if (vocab.size() < kReservedTokens) {
    throw ParseError(path.string(), line_no, "missing reserved tokens");
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& tok : tokens_) out << tok << '\n';
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw ContractError("Vocabulary::token: id out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const auto& tok : split_tokens(text)) ids.push_back(vocab.id(tok));
  return ids;
}

// ---------------------------------------------------------------------------
// Sequences

void EncoderConfig::validate() const {
  if (heads == 0 || width % heads != 0) {
    throw ContractError("EncoderConfig: width must be divisible by heads");
  }
  if (max_len < 4) throw ContractError("EncoderConfig: max_len must be >= 4");
  if (depth == 0) throw ContractError("EncoderConfig: depth must be >= 1");
  const auto limit = static_cast<TokenId>(vocab_size);
  if (pad_id == cls_id || pad_id == sep_id || cls_id == sep_id) {
    throw ContractError("EncoderConfig: reserved ids must be distinct");
  }
  if (pad_id < 0 || cls_id < 0 || sep_id < 0 || pad_id >= limit ||
      cls_id >= limit || sep_id >= limit) {
    throw ContractError("EncoderConfig: reserved ids must be < vocab_size");
  }
}

std::size_t TokenSequence::real_length() const {
  return static_cast<std::size_t>(
      std::count(attention_mask.begin(), attention_mask.end(), 1));
}

namespace {

void finish(TokenSequence& seq, const EncoderConfig& config) {
  seq.attention_mask.assign(seq.ids.size(), 1);
  if (config.pad_to_max_len) {
    while (seq.ids.size() < config.max_len) {
      seq.ids.push_back(config.pad_id);
      seq.segment.push_back(0);
      seq.attention_mask.push_back(0);
    }
  }
}

}  // namespace

TokenSequence build_pair_sequence(std::span<const TokenId> claim,
                                  std::span<const TokenId> sentence,
                                  const EncoderConfig& config) {
  TokenSequence seq;
  const std::size_t claim_room = config.max_len - 3;
  const std::size_t n_claim = std::min(claim.size(), claim_room);
  const std::size_t n_sent = std::min(sentence.size(), claim_room - n_claim);
  seq.truncated = n_claim < claim.size() || n_sent < sentence.size();
  seq.ids.push_back(config.cls_id);
  seq.ids.insert(seq.ids.end(), claim.begin(), claim.begin() + n_claim);
  seq.ids.push_back(config.sep_id);
  seq.segment.assign(seq.ids.size(), 0);
  seq.ids.insert(seq.ids.end(), sentence.begin(), sentence.begin() + n_sent);
  seq.ids.push_back(config.sep_id);
  seq.segment.resize(seq.ids.size(), 1);
  finish(seq, config);
  return seq;
}

TokenSequence build_single_sequence(std::span<const TokenId> claim,
                                    const EncoderConfig& config) {
  TokenSequence seq;
  const std::size_t n_claim = std::min(claim.size(), config.max_len - 2);
  seq.truncated = n_claim < claim.size();
  seq.ids.push_back(config.cls_id);
  seq.ids.insert(seq.ids.end(), claim.begin(), claim.begin() + n_claim);
  seq.ids.push_back(config.sep_id);
  seq.segment.assign(seq.ids.size(), 0);
  finish(seq, config);
  return seq;
}

// ---------------------------------------------------------------------------
// Encoder

SequenceEncoder::SequenceEncoder(ParamSet& params, const std::string& prefix,
                                 EncoderConfig config,
                                 std::shared_ptr<const Vocabulary> vocab)
    : config_(config), vocab_(std::move(vocab)) {
  if (!vocab_) throw ContractError("SequenceEncoder: missing vocabulary");
  if (config_.vocab_size == 0) config_.vocab_size = vocab_->size();
  if (config_.vocab_size < vocab_->size()) {
    throw ContractError("SequenceEncoder: vocab_size smaller than vocabulary");
  }
  config_.validate();
  token_embedding_ = params.add(prefix + ".token_embedding",
                                {config_.vocab_size, config_.width},
                                ParamKind::Embedding);
  position_embedding_ = params.add(prefix + ".position_embedding",
                                   {config_.max_len, config_.width},
                                   ParamKind::Embedding);
  segment_embedding_ = params.add(prefix + ".segment_embedding",
                                  {2, config_.width}, ParamKind::Embedding);
  for (std::size_t b = 0; b < config_.depth; ++b) {
    blocks_.push_back(MhaParams::create(params,
                                        prefix + ".block" + std::to_string(b),
                                        config_.width, config_.heads));
  }
}

EncodedSequence SequenceEncoder::encode(const TokenSequence& sequence,
                                        const DropoutContext& dropout) const {
  const std::size_t n = sequence.ids.size();
  if (n == 0 || n > config_.max_len || sequence.segment.size() != n ||
      sequence.attention_mask.size() != n) {
    throw ContractError("encode: malformed token sequence");
  }
  if (sequence.truncated) ++truncations_;
  std::vector<TokenId> positions(n);
  std::iota(positions.begin(), positions.end(), 0);
  Tensor x = add(add(gather_rows(token_embedding_, sequence.ids),
                     gather_rows(position_embedding_, positions)),
                 gather_rows(segment_embedding_, sequence.segment));
  x = mla::dropout(x, dropout);
  const AttentionOptions options{sequence.attention_mask, dropout};
  for (const auto& block : blocks_) {
    x = add(x, self_mha(x, block, /*use_pe=*/false, options));
  }
  EncodedSequence out;
  out.cls = slice_rows(x, 0, 1);
  out.hidden = std::move(x);
  out.mask = sequence.attention_mask;
  return out;
}

std::vector<TokenId> SequenceEncoder::claim_tokens(std::string_view claim) const {
  auto ids = tokenize(claim, *vocab_);
  if (ids.empty()) throw ContractError("encode: empty claim");
  return ids;
}

EncodedSequence SequenceEncoder::encode_pair(std::string_view claim,
                                             std::string_view sentence,
                                             const DropoutContext& dropout) const {
  const auto claim_ids = claim_tokens(claim);
  const auto sentence_ids = tokenize(sentence, *vocab_);
  return encode(build_pair_sequence(claim_ids, sentence_ids, config_), dropout);
}

EncodedSequence SequenceEncoder::encode_single(std::string_view claim,
                                               const DropoutContext& dropout) const {
  return encode(build_single_sequence(claim_tokens(claim), config_), dropout);
}

}  // namespace mla
