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

#include "mla/layers.hpp"

namespace mla {

Mlp Mlp::create(ParamSet& params, const std::string& prefix, std::size_t in,
                std::size_t hidden, std::size_t out) {
  Mlp mlp;
  mlp.w1 = params.add(prefix + ".w1", {in, hidden}, ParamKind::Weight);
  mlp.b1 = params.add(prefix + ".b1", {1, hidden}, ParamKind::Bias);
  mlp.w2 = params.add(prefix + ".w2", {hidden, out}, ParamKind::Weight);
  mlp.b2 = params.add(prefix + ".b2", {1, out}, ParamKind::Bias);
  return mlp;
}

Tensor Mlp::forward(const Tensor& x, const DropoutContext& dropout) const {
  Tensor h = mla::tanh(add_row(matmul(x, w1), b1));
  return add_row(matmul(mla::dropout(h, dropout), w2), b2);
}

Tensor cross_entropy(const Tensor& logits, std::size_t target) {
  if (logits.rank() == 2 && logits.rows() != 1) {
    throw DimensionError("cross_entropy: expected one row of logits, got " +
                         shape_to_string(logits.shape()));
  }
  return scale(pick(log_softmax(logits), target), -1.0);
}

}  // namespace mla
