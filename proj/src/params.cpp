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

#include "mla/params.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace mla {

Tensor ParamSet::add(std::string name, Shape shape, ParamKind kind) {
  if (find(name) != nullptr) {
    throw ContractError("ParamSet::add: duplicate parameter '" + name + "'");
  }
  Tensor value = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
  entries_.push_back({std::move(name), value, kind, true});
  return value;
}

const Parameter* ParamSet::find(const std::string& name) const {
  for (const auto& p : entries_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

Parameter* ParamSet::find(const std::string& name) {
  for (auto& p : entries_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& p : entries_) p.value.zero_grad();
}

void ParamSet::set_trainable(const std::string& prefix, bool trainable) {
  for (auto& p : entries_) {
    if (p.name.starts_with(prefix)) p.trainable = trainable;
  }
}

std::vector<Tensor> ParamSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& p : entries_) out.push_back(p.value);
  return out;
}

void initialize_parameters(ParamSet& params, Rng& rng, double stddev) {
  for (auto& p : params.entries()) {
    auto data = p.value.mutable_data();
    if (p.kind == ParamKind::Bias) {
      std::fill(data.begin(), data.end(), 0.0);
    } else {
      for (auto& v : data) v = rng.normal(0.0, stddev);
    }
  }
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  const std::uint64_t le = to_little(v);
  out.write(reinterpret_cast<const char*>(&le), 8);
}

void put_f64(std::ofstream& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

bool get_u64(std::ifstream& in, std::uint64_t& v) {
  std::uint64_t le = 0;
  if (!in.read(reinterpret_cast<char*>(&le), 8)) return false;
  v = to_little(le);
  return true;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path,
                      const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  for (const auto& t : tensors) {
    put_u64(out, t.name.size());
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u64(out, t.shape.size());
    for (auto e : t.shape) put_u64(out, e);
    for (double v : t.data) put_f64(out, v);
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[16];
  if (!in.read(magic, 16) || std::memcmp(magic, kCheckpointMagic, 16) != 0) {
    throw std::runtime_error(path.string() + ": not a checkpoint file");
  }
  std::vector<NamedTensor> out;
  std::uint64_t name_len = 0;
  while (get_u64(in, name_len)) {
    auto truncated = [&] {
      return std::runtime_error(path.string() + ": truncated record " +
                                std::to_string(out.size()));
    };
    if (name_len > (1u << 20)) throw truncated();
    NamedTensor t;
    t.name.resize(name_len);
    std::uint64_t rank = 0;
    if (!in.read(t.name.data(), static_cast<std::streamsize>(name_len)) ||
        !get_u64(in, rank) || rank == 0 || rank > 8) {
      throw truncated();
    }
    std::uint64_t count = 1;
    for (std::uint64_t i = 0; i < rank; ++i) {
      std::uint64_t e = 0;
      if (!get_u64(in, e) || e == 0) throw truncated();
      t.shape.push_back(e);
      count *= e;
    }
    t.data.resize(count);
    for (auto& v : t.data) {
      std::uint64_t bits = 0;
      if (!get_u64(in, bits)) throw truncated();
      v = std::bit_cast<double>(bits);
    }
    out.push_back(std::move(t));
  }
  return out;
}

void save_params(const ParamSet& params, const std::filesystem::path& path) {
  std::vector<NamedTensor> tensors;
  for (const auto& p : params.entries()) {
    tensors.push_back({p.name, p.value.shape(),
                       {p.value.data().begin(), p.value.data().end()}});
  }
  write_checkpoint(path, tensors);
}

void load_params(ParamSet& params, const std::filesystem::path& path) {
  std::unordered_map<std::string, NamedTensor> stored;
  for (auto& t : read_checkpoint(path)) stored.emplace(t.name, std::move(t));
  std::vector<std::string> missing;
  for (auto& p : params.entries()) {
    auto it = stored.find(p.name);
    if (it == stored.end()) {
      missing.push_back(p.name);
      continue;
    }
    if (it->second.shape != p.value.shape()) {
      throw DimensionError("load_params: '" + p.name + "' stored as " +
                           shape_to_string(it->second.shape) + ", expected " +
                           shape_to_string(p.value.shape()));
    }
    std::copy(it->second.data.begin(), it->second.data.end(),
              p.value.mutable_data().begin());
  }
  if (!missing.empty()) {
    throw ValidationError("checkpoint " + path.string() + " lacks parameters",
                          missing);
  }
}

}  // namespace mla
