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

// Dense row-major tensors of doubles with tape-free reverse-mode autodiff.
//
// Every operation returns a new Tensor whose node keeps shared references to
// its inputs and a closure that pushes the output gradient back into them.
// Tensor::backward() orders the reachable subgraph topologically and runs the
// closures in reverse, so a node consumed by several operations receives the
// sum of their contributions.
//
// Broadcasting is limited to tensor*scalar (scale) and per-row scaling
// (scale_rows); every other binary operation requires identical shapes.

#ifndef MLA_TENSOR_HPP_
#define MLA_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mla/errors.hpp"
#include "mla/rng.hpp"

namespace mla {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a gradient arrives
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grad.
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  // 1 x n row vector.
  static Tensor row(std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Extents of a rank-2 tensor.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const;
  // Direct write access; intended for parameter updates, loading, and
  // finite-difference perturbation of leaves.
  std::span<double> mutable_data();
  double operator[](std::size_t i) const { return data()[i]; }
  double at(std::size_t r, std::size_t c) const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  // Empty span if no gradient has been accumulated.
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  // Reverse-mode sweep from this scalar. Leaf gradients accumulate.
  void backward() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// Gradient recording is on by default; the guard turns it off for the
// enclosed scope on the current thread (inference, finite differences).
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

namespace detail {

// Builds a result node. Parents and the backward closure are only retained
// when recording is on and at least one parent needs a gradient.
Tensor make_result(Shape shape, std::vector<double> data,
                   std::vector<std::shared_ptr<Node>> parents,
                   std::function<void(Node&)> backward);

// C[m x p] += A[m x k] * B[k x p]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t p);
// C[m x p] += A[k x m]^T * B[k x p]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t p);
// C[m x p] += A[m x k] * B[p x k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t p);

}  // namespace detail

// Linear algebra.
Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T without materializing the transpose.
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Elementwise.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// Row m of a (rank 2) multiplied by s[m]; s may have any shape of size rows.
Tensor scale_rows(const Tensor& a, const Tensor& s);
// a + row broadcast over every row of a.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor relu(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor log(const Tensor& a);
// Same values, no gradient path.
Tensor detach(const Tensor& a);

// Softmax over the last axis, max-shifted.
Tensor softmax(const Tensor& a);
// log(softmax(a)) along the last axis, computed stably.
Tensor log_softmax(const Tensor& a);

// Reductions / indexing.
Tensor sum(const Tensor& a);
// Element at flat index as a scalar.
Tensor pick(const Tensor& a, std::size_t index);
Tensor reshape(const Tensor& a, Shape shape);

// Row-block structure (rank 2).
Tensor concat_rows(std::span<const Tensor> parts);
std::vector<Tensor> split_rows(const Tensor& a,
                               std::span<const std::size_t> extents);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count);
// Embedding lookup: result row i = table row ids[i].
Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> ids);

// Inverted dropout. Identity when !train or p == 0; otherwise each element is
// zeroed with probability p and survivors are scaled by 1/(1-p). The mask is
// captured for the backward pass.
struct DropoutContext {
  double p = 0.0;
  Rng* rng = nullptr;
  bool train = false;
  bool active() const { return train && p > 0.0 && rng != nullptr; }
};
Tensor dropout(const Tensor& a, const DropoutContext& ctx);

}  // namespace mla

#endif  // MLA_TENSOR_HPP_
