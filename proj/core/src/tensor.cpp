#include "gdr/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "gdr/error.hpp"

namespace gdr {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape_in, bool requires_grad_in)
    : shape(std::move(shape_in)),
      data(std::make_shared<std::vector<double>>(shape_product(shape), 0.0)),
      requires_grad(requires_grad_in) {
  if (requires_grad) ensure_grad();
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  return Tensor(std::move(shape), requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  Tensor t(std::move(shape));
  for (double& x : *t.data) x = value;
  return t;
}

Tensor Tensor::from_values(std::vector<std::size_t> shape, std::vector<double> values,
                           bool requires_grad) {
  if (shape_product(shape) != values.size()) {
    throw std::invalid_argument("from_values: shape " + shape_string(shape) + " needs " +
                                std::to_string(shape_product(shape)) + " values, got " +
                                std::to_string(values.size()));
  }
  Tensor t;
  t.shape = std::move(shape);
  t.data = std::make_shared<std::vector<double>>(std::move(values));
  t.requires_grad = requires_grad;
  if (requires_grad) t.ensure_grad();
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  std::size_t n = values.size();
  return from_values({1, n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return from_values({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (shape.size() != 2) throw std::invalid_argument("rows: tensor is not rank-2");
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (shape.size() != 2) throw std::invalid_argument("cols: tensor is not rank-2");
  return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return (*data)[r * cols() + c]; }

double Tensor::at(std::size_t r, std::size_t c) const { return (*data)[r * cols() + c]; }

double Tensor::scalar() const {
  if (size() != 1) throw std::invalid_argument("scalar: tensor has size " + std::to_string(size()));
  return (*data)[0];
}

void Tensor::ensure_grad() {
  if (!grad) grad = std::make_shared<std::vector<double>>(data->size(), 0.0);
}

void Tensor::zero_grad() {
  if (grad) {
    for (double& g : *grad) g = 0.0;
  }
}

void Tensor::backward() {
  if (size() != 1) throw std::invalid_argument("backward: loss tensor must be scalar");
  ensure_grad();
  (*grad)[0] = 1.0;

  // Iterative post-order DFS over tape nodes; identity is the Node pointer.
  std::vector<Tensor> order;
  std::unordered_set<const Node*> seen;
  struct Frame {
    Tensor t;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  if (node) {
    stack.push_back({*this, 0});
    seen.insert(node.get());
  }
  while (!stack.empty()) {
    Frame& top = stack.back();
    const auto& parents = top.t.node->parents;
    bool descended = false;
    while (top.next_parent < parents.size()) {
      const Tensor& p = parents[top.next_parent++];
      if (p.node && seen.insert(p.node.get()).second) {
        stack.push_back({p, 0});
        descended = true;
        break;
      }
    }
    if (!descended && top.next_parent >= parents.size()) {
      order.push_back(top.t);
      stack.pop_back();
    }
  }

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (it->node && it->node->backprop) it->node->backprop(*it);
  }
}

void check_finite(const std::vector<double>& values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("non-finite value in ") + what);
    }
  }
}

void check_finite(const Tensor& t, const char* what) {
  if (t.data) check_finite(*t.data, what);
}

}  // namespace gdr
