#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gdr {

struct Node;

// Dense 64-bit float array with an optional gradient and a tape edge for
// reverse-mode differentiation. Copies share storage (data, grad and node),
// so a Tensor behaves like a handle with value syntax.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, bool requires_grad = false);

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor from_values(std::vector<std::size_t> shape, std::vector<double> values,
                            bool requires_grad = false);
  // [1, n] row vector.
  static Tensor row(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  bool defined() const { return static_cast<bool>(data); }
  std::size_t size() const { return data ? data->size() : 0; }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  bool is_scalar() const { return size() == 1; }

  double& at(std::size_t r, std::size_t c);
  double at(std::size_t r, std::size_t c) const;
  double& operator[](std::size_t i) { return (*data)[i]; }
  double operator[](std::size_t i) const { return (*data)[i]; }
  double scalar() const;

  // Allocates a zero gradient buffer if absent.
  void ensure_grad();
  void zero_grad();

  // Reverse-mode sweep from a scalar tensor: seeds grad = 1 and walks the
  // tape in reverse topological order.
  void backward();

  std::vector<std::size_t> shape;
  std::shared_ptr<std::vector<double>> data;
  std::shared_ptr<std::vector<double>> grad;
  bool requires_grad = false;
  std::shared_ptr<Node> node;
};

struct Node {
  std::vector<Tensor> parents;
  // Reads the output tensor's grad and accumulates into parents' grads.
  std::function<void(const Tensor&)> backprop;
};

// True while gradients are being recorded. Inference paths (greedy decoding,
// matcher calls inside the training loop, evaluation) disable recording.
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

// Throws NumericError naming `what` if any element is NaN or Inf.
void check_finite(const std::vector<double>& values, const char* what);
void check_finite(const Tensor& t, const char* what);

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

}  // namespace gdr
