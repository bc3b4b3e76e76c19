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

// Small feed-forward heads shared by the selector and the verifier.

#ifndef MLA_LAYERS_HPP_
#define MLA_LAYERS_HPP_

#include <cstddef>
#include <string>

#include "mla/params.hpp"
#include "mla/tensor.hpp"

namespace mla {

// tanh(x W1 + b1) W2 + b2, applied to every row of x.
struct Mlp {
  Tensor w1, b1, w2, b2;

  static Mlp create(ParamSet& params, const std::string& prefix, std::size_t in,
                    std::size_t hidden, std::size_t out);
  Tensor forward(const Tensor& x, const DropoutContext& dropout = {}) const;
  std::size_t out_width() const { return w2.cols(); }
};

// -log softmax(logits)[target] for a single row of logits.
Tensor cross_entropy(const Tensor& logits, std::size_t target);

}  // namespace mla

#endif  // MLA_LAYERS_HPP_
