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

// Shared helpers for the unit tests.

#ifndef MLA_TESTS_TEST_UTIL_HPP_
#define MLA_TESTS_TEST_UTIL_HPP_

#include <cmath>
#include <cstddef>
#include <vector>

#include "mla/rng.hpp"
#include "mla/tensor.hpp"

namespace mla::testing {

inline Tensor random_tensor(Rng& rng, Shape shape, double stddev = 1.0,
                            bool requires_grad = false) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  std::vector<double> data(n);
  for (auto& v : data) v = rng.normal(0.0, stddev);
  return Tensor::from(std::move(shape), std::move(data), requires_grad);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

// Weighted sum of all entries; a generic scalar readout for gradient checks.
inline Tensor readout(const Tensor& x, const Tensor& weights) {
  return sum(mul(x, weights));
}

}  // namespace mla::testing

#endif  // MLA_TESTS_TEST_UTIL_HPP_
