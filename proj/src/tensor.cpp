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

#include "mla/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>
#include <utility>

namespace mla {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

std::string shape_to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {

thread_local bool g_grad_enabled = true;

std::size_t product(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have rank >= 1");
  for (auto e : shape) {
    if (e == 0) {
      throw DimensionError("tensor extents must be positive, got " +
                           shape_to_string(shape));
    }
  }
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
}

// Gradient sink of a parent, or nullptr if it does not need one.
double* grad_of(const NodePtr& parent) {
  return parent->requires_grad ? parent->ensure_grad().data() : nullptr;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  check_shape(shape);
  auto node = std::make_shared<Node>();
  node->data.assign(product(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape(shape);
  if (product(shape) != data.size()) {
    throw DimensionError("Tensor::from: shape " + shape_to_string(shape) +
                         " does not hold " + std::to_string(data.size()) +
                         " values");
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::row(std::vector<double> data, bool requires_grad) {
  const std::size_t n = data.size();
  return from({1, n}, std::move(data), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  require_defined(*this, "shape");
  return node_->shape;
}

std::size_t Tensor::size() const {
  require_defined(*this, "size");
  return node_->data.size();
}

std::size_t Tensor::rows() const {
  require_rank2(*this, "rows");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  require_rank2(*this, "cols");
  return node_->shape[1];
}

std::span<const double> Tensor::data() const {
  require_defined(*this, "data");
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  require_defined(*this, "mutable_data");
  return node_->data;
}

double Tensor::at(std::size_t r, std::size_t c) const {
  require_rank2(*this, "at");
  return node_->data[r * node_->shape[1] + c];
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item: tensor of shape " + shape_to_string(shape()) +
                        " is not a scalar");
  }
  return node_->data[0];
}

bool Tensor::requires_grad() const {
  return node_ != nullptr && node_->requires_grad;
}

void Tensor::set_requires_grad(bool value) {
  require_defined(*this, "set_requires_grad");
  node_->requires_grad = value;
}

std::span<const double> Tensor::grad() const {
  require_defined(*this, "grad");
  return node_->grad;
}

std::span<double> Tensor::mutable_grad() {
  require_defined(*this, "mutable_grad");
  return node_->ensure_grad();
}

void Tensor::zero_grad() {
  require_defined(*this, "zero_grad");
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
  require_defined(*this, "backward");
  if (size() != 1) {
    throw ContractError("backward: output of shape " +
                        shape_to_string(shape()) + " is not a scalar");
  }
  if (!node_->requires_grad) return;

  // Iterative post-order DFS yields a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) {
  g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

// ---------------------------------------------------------------------------
// Kernels

namespace detail {

Tensor make_result(Shape shape, std::vector<double> data,
                   std::vector<NodePtr> parents,
                   std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void gemm_nn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t p) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * p;
    const double* arow = a + i * k;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double aik = arow[kk];
      if (aik == 0.0) continue;
      const double* brow = b + kk * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aik * brow[j];
    }
  }
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t p) {
  for (std::size_t kk = 0; kk < k; ++kk) {
    const double* arow = a + kk * m;
    const double* brow = b + kk * p;
    for (std::size_t i = 0; i < m; ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      double* crow = c + i * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += aki * brow[j];
    }
  }
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m,
             std::size_t k, std::size_t p) {
  // Transposing B keeps the inner loop a contiguous axpy.
  std::vector<double> bt(k * p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t kk = 0; kk < k; ++kk) bt[kk * p + j] = b[j * k + kk];
  }
  gemm_nn(a, bt.data(), c, m, k, p);
}

}  // namespace detail

using detail::make_result;

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), p = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions disagree, " +
                         shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  std::vector<double> out(m * p, 0.0);
  detail::gemm_nn(a.data().data(), b.data().data(), out.data(), m, k, p);
  return make_result({m, p}, std::move(out), {a.node(), b.node()},
                     [m, k, p](Node& self) {
                       const NodePtr& na = self.parents[0];
                       const NodePtr& nb = self.parents[1];
                       if (double* ga = grad_of(na)) {
                         detail::gemm_nt(self.grad.data(), nb->data.data(), ga,
                                         m, p, k);
                       }
                       if (double* gb = grad_of(nb)) {
                         detail::gemm_tn(na->data.data(), self.grad.data(), gb,
                                         k, m, p);
                       }
                     });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  const std::size_t m = a.rows(), k = a.cols(), p = b.rows();
  if (b.cols() != k) {
    throw DimensionError("matmul_nt: inner dimensions disagree, " +
                         shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()) + "^T");
  }
  std::vector<double> out(m * p, 0.0);
  detail::gemm_nt(a.data().data(), b.data().data(), out.data(), m, k, p);
  return make_result({m, p}, std::move(out), {a.node(), b.node()},
                     [m, k, p](Node& self) {
                       const NodePtr& na = self.parents[0];
                       const NodePtr& nb = self.parents[1];
                       if (double* ga = grad_of(na)) {
                         detail::gemm_nn(self.grad.data(), nb->data.data(), ga,
                                         m, p, k);
                       }
                       if (double* gb = grad_of(nb)) {
                         detail::gemm_tn(self.grad.data(), na->data.data(), gb,
                                         p, m, k);
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  const auto src = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = src[i * n + j];
  }
  return make_result({n, m}, std::move(out), {a.node()}, [m, n](Node& self) {
    if (double* ga = grad_of(self.parents[0])) {
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  return make_result(a.shape(), std::move(out), {a.node(), b.node()},
                     [](Node& self) {
                       for (const auto& parent : self.parents) {
                         if (double* g = grad_of(parent)) {
                           for (std::size_t i = 0; i < self.grad.size(); ++i) {
                             g[i] += self.grad[i];
                           }
                         }
                       }
                     });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
  return make_result(a.shape(), std::move(out), {a.node(), b.node()},
                     [](Node& self) {
                       if (double* ga = grad_of(self.parents[0])) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           ga[i] += self.grad[i];
                         }
                       }
                       if (double* gb = grad_of(self.parents[1])) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           gb[i] -= self.grad[i];
                         }
                       }
                     });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
  return make_result(a.shape(), std::move(out), {a.node(), b.node()},
                     [](Node& self) {
                       const NodePtr& na = self.parents[0];
                       const NodePtr& nb = self.parents[1];
                       if (double* ga = grad_of(na)) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           ga[i] += self.grad[i] * nb->data[i];
                         }
                       }
                       if (double* gb = grad_of(nb)) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           gb[i] += self.grad[i] * na->data[i];
                         }
                       }
                     });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v *= factor;
  return make_result(a.shape(), std::move(out), {a.node()},
                     [factor](Node& self) {
                       if (double* g = grad_of(self.parents[0])) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           g[i] += factor * self.grad[i];
                         }
                       }
                     });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require_rank2(a, "add_row");
  const std::size_t m = a.rows(), n = a.cols();
  if (row.size() != n) {
    throw DimensionError("add_row: " + shape_to_string(a.shape()) + " vs row " +
                         shape_to_string(row.shape()));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto rd = row.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += rd[j];
  }
  return make_result(a.shape(), std::move(out), {a.node(), row.node()},
                     [m, n](Node& self) {
                       if (double* ga = grad_of(self.parents[0])) {
                         for (std::size_t i = 0; i < m * n; ++i) ga[i] += self.grad[i];
                       }
                       if (double* gr = grad_of(self.parents[1])) {
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t j = 0; j < n; ++j) gr[j] += self.grad[i * n + j];
                         }
                       }
                     });
}

Tensor scale_rows(const Tensor& a, const Tensor& s) {
  require_rank2(a, "scale_rows");
  const std::size_t m = a.rows(), n = a.cols();
  if (s.size() != m) {
    throw DimensionError("scale_rows: " + shape_to_string(a.shape()) +
                         " rows vs gate of shape " + shape_to_string(s.shape()));
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  const auto sd = s.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] *= sd[i];
  }
  return make_result(a.shape(), std::move(out), {a.node(), s.node()},
                     [m, n](Node& self) {
                       const NodePtr& na = self.parents[0];
                       const NodePtr& ns = self.parents[1];
                       if (double* ga = grad_of(na)) {
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t j = 0; j < n; ++j) {
                             ga[i * n + j] += self.grad[i * n + j] * ns->data[i];
                           }
                         }
                       }
                       if (double* gs = grad_of(ns)) {
                         for (std::size_t i = 0; i < m; ++i) {
                           double acc = 0.0;
                           for (std::size_t j = 0; j < n; ++j) {
                             acc += self.grad[i * n + j] * na->data[i * n + j];
                           }
                           gs[i] += acc;
                         }
                       }
                     });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return make_result(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    const NodePtr& na = self.parents[0];
    if (double* g = grad_of(na)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        if (na->data[i] > 0.0) g[i] += self.grad[i];
      }
    }
  });
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) v = std::tanh(v);
  return make_result(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    if (double* g = grad_of(self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double y = self.data[i];
        g[i] += self.grad[i] * (1.0 - y * y);
      }
    }
  });
}

Tensor log(const Tensor& a) {
  std::vector<double> out(a.data().begin(), a.data().end());
  for (auto& v : out) {
    if (!(v > 0.0)) throw ContractError("log: non-positive input");
    v = std::log(v);
  }
  return make_result(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    const NodePtr& na = self.parents[0];
    if (double* g = grad_of(na)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        g[i] += self.grad[i] / na->data[i];
      }
    }
  });
}

Tensor detach(const Tensor& a) {
  return Tensor::from(a.shape(), {a.data().begin(), a.data().end()});
}

Tensor softmax(const Tensor& a) {
  const Shape& shape = a.shape();
  const std::size_t width = shape.back();
  const std::size_t slices = a.size() / width;
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t r = 0; r < slices; ++r) {
    double* row = out.data() + r * width;
    const double mx = *std::max_element(row, row + width);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      row[j] = std::exp(row[j] - mx);
      total += row[j];
    }
    for (std::size_t j = 0; j < width; ++j) row[j] /= total;
  }
  return make_result(shape, std::move(out), {a.node()},
                     [slices, width](Node& self) {
                       if (double* g = grad_of(self.parents[0])) {
                         for (std::size_t r = 0; r < slices; ++r) {
                           const double* y = self.data.data() + r * width;
                           const double* gy = self.grad.data() + r * width;
                           double dot = 0.0;
                           for (std::size_t j = 0; j < width; ++j) dot += y[j] * gy[j];
                           for (std::size_t j = 0; j < width; ++j) {
                             g[r * width + j] += y[j] * (gy[j] - dot);
                           }
                         }
                       }
                     });
}

Tensor log_softmax(const Tensor& a) {
  const Shape& shape = a.shape();
  const std::size_t width = shape.back();
  const std::size_t slices = a.size() / width;
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t r = 0; r < slices; ++r) {
    double* row = out.data() + r * width;
    const double mx = *std::max_element(row, row + width);
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) total += std::exp(row[j] - mx);
    const double lse = mx + std::log(total);
    for (std::size_t j = 0; j < width; ++j) row[j] -= lse;
  }
  return make_result(shape, std::move(out), {a.node()},
                     [slices, width](Node& self) {
                       if (double* g = grad_of(self.parents[0])) {
                         for (std::size_t r = 0; r < slices; ++r) {
                           const double* y = self.data.data() + r * width;
                           const double* gy = self.grad.data() + r * width;
                           double total = 0.0;
                           for (std::size_t j = 0; j < width; ++j) total += gy[j];
                           for (std::size_t j = 0; j < width; ++j) {
                             g[r * width + j] += gy[j] - std::exp(y[j]) * total;
                           }
                         }
                       }
                     });
}

// ---------------------------------------------------------------------------
// Reductions / indexing

Tensor sum(const Tensor& a) {
  double total = 0.0;
  for (double v : a.data()) total += v;
  return make_result({1}, {total}, {a.node()}, [](Node& self) {
    const NodePtr& na = self.parents[0];
    if (double* g = grad_of(na)) {
      for (std::size_t i = 0; i < na->data.size(); ++i) g[i] += self.grad[0];
    }
  });
}

Tensor pick(const Tensor& a, std::size_t index) {
  if (index >= a.size()) {
    throw DimensionError("pick: index " + std::to_string(index) +
                         " out of range for " + shape_to_string(a.shape()));
  }
  return make_result({1}, {a.data()[index]}, {a.node()}, [index](Node& self) {
    if (double* g = grad_of(self.parents[0])) g[index] += self.grad[0];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  check_shape(shape);
  if (product(shape) != a.size()) {
    throw DimensionError("reshape: " + shape_to_string(a.shape()) + " to " +
                         shape_to_string(shape));
  }
  return make_result(std::move(shape), {a.data().begin(), a.data().end()},
                     {a.node()}, [](Node& self) {
                       if (double* g = grad_of(self.parents[0])) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           g[i] += self.grad[i];
                         }
                       }
                     });
}

// ---------------------------------------------------------------------------
// Block structure

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  const std::size_t n = parts[0].cols();
  std::size_t total_rows = 0;
  std::vector<NodePtr> parents;
  std::vector<std::size_t> offsets;
  for (const auto& part : parts) {
    require_rank2(part, "concat_rows");
    if (part.cols() != n) {
      throw DimensionError("concat_rows: width mismatch " +
                           shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(part.shape()));
    }
    offsets.push_back(total_rows * n);
    total_rows += part.rows();
    parents.push_back(part.node());
  }
  std::vector<double> out;
  out.reserve(total_rows * n);
  for (const auto& part : parts) {
    out.insert(out.end(), part.data().begin(), part.data().end());
  }
  return make_result({total_rows, n}, std::move(out), std::move(parents),
                     [offsets](Node& self) {
                       for (std::size_t p = 0; p < self.parents.size(); ++p) {
                         const NodePtr& part = self.parents[p];
                         if (double* g = grad_of(part)) {
                           const double* src = self.grad.data() + offsets[p];
                           for (std::size_t i = 0; i < part->data.size(); ++i) {
                             g[i] += src[i];
                           }
                         }
                       }
                     });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t count) {
  require_rank2(a, "slice_rows");
  const std::size_t n = a.cols();
  if (count == 0 || begin + count > a.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") of " +
                         shape_to_string(a.shape()));
  }
  const auto src = a.data().subspan(begin * n, count * n);
  return make_result({count, n}, {src.begin(), src.end()}, {a.node()},
                     [offset = begin * n](Node& self) {
                       if (double* g = grad_of(self.parents[0])) {
                         for (std::size_t i = 0; i < self.grad.size(); ++i) {
                           g[offset + i] += self.grad[i];
                         }
                       }
                     });
}

std::vector<Tensor> split_rows(const Tensor& a,
                               std::span<const std::size_t> extents) {
  require_rank2(a, "split_rows");
  const std::size_t total =
      std::accumulate(extents.begin(), extents.end(), std::size_t{0});
  if (total != a.rows()) {
    throw DimensionError("split_rows: extents sum to " + std::to_string(total) +
                         " but input is " + shape_to_string(a.shape()));
  }
  std::vector<Tensor> out;
  std::size_t begin = 0;
  for (auto e : extents) {
    out.push_back(slice_rows(a, begin, e));
    begin += e;
  }
  return out;
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t m = parts[0].rows();
  std::size_t total_cols = 0;
  std::vector<NodePtr> parents;
  std::vector<std::size_t> widths;
  for (const auto& part : parts) {
    require_rank2(part, "concat_cols");
    if (part.rows() != m) {
      throw DimensionError("concat_cols: height mismatch " +
                           shape_to_string(parts[0].shape()) + " vs " +
                           shape_to_string(part.shape()));
    }
    widths.push_back(part.cols());
    total_cols += part.cols();
    parents.push_back(part.node());
  }
  std::vector<double> out(m * total_cols);
  std::size_t col = 0;
  for (const auto& part : parts) {
    const auto src = part.data();
    const std::size_t w = part.cols();
    for (std::size_t i = 0; i < m; ++i) {
      std::copy_n(src.data() + i * w, w, out.data() + i * total_cols + col);
    }
    col += w;
  }
  return make_result({m, total_cols}, std::move(out), std::move(parents),
                     [m, total_cols, widths](Node& self) {
                       std::size_t c0 = 0;
                       for (std::size_t p = 0; p < self.parents.size(); ++p) {
                         const std::size_t w = widths[p];
                         if (double* g = grad_of(self.parents[p])) {
                           for (std::size_t i = 0; i < m; ++i) {
                             for (std::size_t j = 0; j < w; ++j) {
                               g[i * w + j] += self.grad[i * total_cols + c0 + j];
                             }
                           }
                         }
                         c0 += w;
                       }
                     });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t count) {
  require_rank2(a, "slice_cols");
  const std::size_t m = a.rows(), n = a.cols();
  if (count == 0 || begin + count > n) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) +
                         ", " + std::to_string(begin + count) + ") of " +
                         shape_to_string(a.shape()));
  }
  std::vector<double> out(m * count);
  const auto src = a.data();
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(src.data() + i * n + begin, count, out.data() + i * count);
  }
  return make_result({m, count}, std::move(out), {a.node()},
                     [m, n, begin, count](Node& self) {
                       if (double* g = grad_of(self.parents[0])) {
                         for (std::size_t i = 0; i < m; ++i) {
                           for (std::size_t j = 0; j < count; ++j) {
                             g[i * n + begin + j] += self.grad[i * count + j];
                           }
                         }
                       }
                     });
}

Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> ids) {
  require_rank2(table, "gather_rows");
  if (ids.empty()) throw ContractError("gather_rows: empty id list");
  const std::size_t vocab = table.rows(), n = table.cols();
  std::vector<double> out(ids.size() * n);
  const auto src = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw DimensionError("gather_rows: id " + std::to_string(ids[i]) +
                           " outside table " + shape_to_string(table.shape()));
    }
    std::copy_n(src.data() + static_cast<std::size_t>(ids[i]) * n, n,
                out.data() + i * n);
  }
  return make_result({ids.size(), n}, std::move(out), {table.node()},
                     [ids = std::vector<std::int32_t>(ids.begin(), ids.end()),
                      n](Node& self) {
                       if (double* g = grad_of(self.parents[0])) {
                         for (std::size_t i = 0; i < ids.size(); ++i) {
                           double* dst = g + static_cast<std::size_t>(ids[i]) * n;
                           for (std::size_t j = 0; j < n; ++j) {
                             dst[j] += self.grad[i * n + j];
                           }
                         }
                       }
                     });
}

Tensor dropout(const Tensor& a, const DropoutContext& ctx) {
  if (!ctx.active()) return a;
  if (ctx.p >= 1.0) throw ContractError("dropout: p must be < 1");
  const double keep_scale = 1.0 / (1.0 - ctx.p);
  std::vector<double> mask(a.size());
  for (auto& m : mask) m = ctx.rng->bernoulli(ctx.p) ? 0.0 : keep_scale;
  std::vector<double> out(a.data().begin(), a.data().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make_result(a.shape(), std::move(out), {a.node()},
                     [mask = std::move(mask)](Node& self) {
                       if (double* g = grad_of(self.parents[0])) {
                         for (std::size_t i = 0; i < mask.size(); ++i) {
                           g[i] += mask[i] * self.grad[i];
                         }
                       }
                     });
}

}  // namespace mla
