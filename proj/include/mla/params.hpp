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

#ifndef MLA_PARAMS_HPP_
#define MLA_PARAMS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mla/rng.hpp"
#include "mla/tensor.hpp"

namespace mla {

enum class ParamKind { Weight, Bias, Embedding };

struct Parameter {
  std::string name;
  Tensor value;
  ParamKind kind = ParamKind::Weight;
  bool trainable = true;
};

// Ordered registry of named leaf tensors. Model components create their
// parameters here and keep Tensor handles that share the same storage.
class ParamSet {
 public:
  Tensor add(std::string name, Shape shape, ParamKind kind);

  std::vector<Parameter>& entries() { return entries_; }
  const std::vector<Parameter>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const Parameter* find(const std::string& name) const;
  Parameter* find(const std::string& name);
  std::size_t scalar_count() const;

  void zero_grad();
  // Marks every parameter whose name starts with prefix.
  void set_trainable(const std::string& prefix, bool trainable);
  std::vector<Tensor> tensors() const;

 private:
  std::vector<Parameter> entries_;
};

// Weights and embeddings ~ N(0, stddev); biases exactly zero.
void initialize_parameters(ParamSet& params, Rng& rng, double stddev = 0.02);

// Checkpoint layout (all integers uint64 little-endian, floats IEEE-754
// binary64 little-endian):
//   16-byte magic "MLA-CHECKPOINT\0\1"
//   repeated until EOF: name_len, name bytes (UTF-8), rank, extents[rank],
//   data[product(extents)]
inline constexpr char kCheckpointMagic[16] = {'M', 'L', 'A', '-', 'C', 'H',
                                              'E', 'C', 'K', 'P', 'O', 'I',
                                              'N', 'T', '\0', '\1'};

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<double> data;
};

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

void save_params(const ParamSet& params, const std::filesystem::path& path);
// Copies stored values into existing parameters; names and shapes must match
// and every parameter must be present.
void load_params(ParamSet& params, const std::filesystem::path& path);

}  // namespace mla

#endif  // MLA_PARAMS_HPP_
