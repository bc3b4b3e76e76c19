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

#include "mla/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace mla {

namespace {

double evaluate_scalar(const std::function<Tensor()>& f) {
  const Tensor y = f();
  if (!y.defined() || y.size() != 1) {
    throw ContractError("grad_check: function output is not a scalar");
  }
  return y.item();
}

}  // namespace

GradCheckResult grad_check_all(const std::function<Tensor()>& f,
                               std::span<Tensor> inputs, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-4)) {
    throw ContractError("grad_check: eps must lie in [1e-6, 1e-4]");
  }
  std::vector<bool> had_grad;
  for (auto& x : inputs) {
    had_grad.push_back(x.requires_grad());
    x.set_requires_grad(true);
    x.zero_grad();
  }

  const Tensor y = f();
  if (!y.defined() || y.size() != 1) {
    throw ContractError("grad_check: function output of shape " +
                        (y.defined() ? shape_to_string(y.shape()) : "<none>") +
                        " is not a scalar");
  }
  y.backward();

  GradCheckResult result;
  NoGradGuard no_grad;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    Tensor& x = inputs[t];
    const std::vector<double> analytic =
        x.grad().empty() ? std::vector<double>(x.size(), 0.0)
                         : std::vector<double>(x.grad().begin(), x.grad().end());
    auto data = x.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double original = data[i];
      data[i] = original + eps;
      const double plus = evaluate_scalar(f);
      data[i] = original - eps;
      const double minus = evaluate_scalar(f);
      data[i] = original;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double denom =
          std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
      const double err = std::abs(analytic[i] - numeric) / denom;
      ++result.coordinates;
      if (err > result.max_rel_error || !std::isfinite(err)) {
        result.max_rel_error = std::isfinite(err) ? err : INFINITY;
        result.worst_input = t;
        result.worst_index = i;
        result.analytic = analytic[i];
        result.numeric = numeric;
      }
    }
  }
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    inputs[t].zero_grad();
    inputs[t].set_requires_grad(had_grad[t]);
  }
  return result;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                  double eps) {
  Tensor inputs[1] = {x};
  return grad_check_all([&] { return f(inputs[0]); }, inputs, eps)
      .max_rel_error;
}

}  // namespace mla
