#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gdr/rng.hpp"
#include "gdr/tensor.hpp"

namespace gdr {

// Ordered collection of named tensors. Iteration order is insertion order,
// which fixes the serialization layout. Checkpoints are little-endian binary:
// magic "GDR1", u32 tensor count, then per tensor u32 name length, UTF-8
// name, u32 rank, u32 dims, raw 32-bit float payload.
class ParameterStore {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  bool has_prefix(const std::string& prefix) const;

  std::size_t count() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }

  // Tensors that participate in optimization.
  std::vector<std::pair<std::string, Tensor>> trainable() const;

  void save(const std::string& path) const;
  static ParameterStore load(const std::string& path);

  // Creates, registers and Glorot-initializes a weight matrix; biases and
  // layer-norm parameters use the companion helpers below.
  Tensor& init_weight(const std::string& name, std::size_t fan_in, std::size_t fan_out, Rng& rng);
  Tensor& init_zeros(const std::string& name, std::vector<std::size_t> shape);
  Tensor& init_ones(const std::string& name, std::vector<std::size_t> shape);

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Scalar metadata entry helpers (stored as 1-element tensors so checkpoints
// stay self-describing single files).
void put_meta(ParameterStore& store, const std::string& name, double value);
double get_meta(const ParameterStore& store, const std::string& name);

}  // namespace gdr
