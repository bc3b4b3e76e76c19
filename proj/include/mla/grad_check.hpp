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

#ifndef MLA_GRAD_CHECK_HPP_
#define MLA_GRAD_CHECK_HPP_

#include <cstddef>
#include <functional>
#include <span>
#include <string>

#include "mla/tensor.hpp"

namespace mla {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;  // index into the checked inputs
  std::size_t worst_index = 0;  // flat coordinate within that input
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Compares backward() against central differences for every coordinate of
// every input. The error per coordinate is
//   |analytic - numeric| / max(1, |analytic|, |numeric|).
// f must return a one-element tensor and must be deterministic (no active
// dropout); eps must lie in [1e-6, 1e-4].
GradCheckResult grad_check_all(const std::function<Tensor()>& f,
                               std::span<Tensor> inputs, double eps = 1e-5);

// Single-input form: f is evaluated at x.
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                  double eps = 1e-5);

}  // namespace mla

#endif  // MLA_GRAD_CHECK_HPP_
