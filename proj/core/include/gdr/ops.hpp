#pragma once

#include <cstdint>
#include <vector>

#include "gdr/tensor.hpp"

namespace gdr {

// Boolean attention mask over (query row, key column). An undefined mask
// means every position is attendable.
class AttnMask {
 public:
  AttnMask() = default;
  AttnMask(std::size_t rows, std::size_t cols, bool keep_all = true)
      : rows_(rows), cols_(cols), keep_(rows * cols, keep_all ? 1 : 0) {}

  static AttnMask causal(std::size_t n) {
    AttnMask m(n, n, false);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) m.set(i, j, true);
    return m;
  }

  bool defined() const { return rows_ != 0; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool keep(std::size_t r, std::size_t c) const { return keep_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool keep) { keep_[r * cols_ + c] = keep ? 1 : 0; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> keep_;
};

// All operations record tape nodes when grad recording is on and an input
// requires grad. Shapes are validated and mismatches throw invalid_argument.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// [r, c] + [1, c] broadcast over rows.
Tensor add_row_broadcast(const Tensor& m, const Tensor& row);
Tensor relu(const Tensor& a);
Tensor tanh_activation(const Tensor& a);

// Row-wise softmax with max-subtraction. With a mask, softmax is computed
// over kept entries only; masked entries are exactly zero and are never read,
// so outputs are bit-independent of masked inputs. A row with no kept entry
// throws NumericError (degenerate mask).
Tensor row_softmax(const Tensor& a, const AttnMask* mask = nullptr);

// Mean over the first `valid_rows` rows -> [1, c]. valid_rows == 0 means all.
Tensor mean_rows(const Tensor& a, std::size_t valid_rows = 0);

Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, std::size_t first, std::size_t count);

// Gathers rows of `table` by id -> [ids.size(), table.cols()].
Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids);

// Per-row normalization of x to zero mean / unit variance (eps inside the
// square root), followed by elementwise gain and bias ([1, c] each).
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       double eps = 1e-6);

// Mean negative log-likelihood over positions whose target != pad_id,
// computed stably from logits [t, v]. Gradient is softmax-minus-onehot
// scaled by 1/(non-pad count).
Tensor cross_entropy_with_logits(const Tensor& logits, const std::vector<int>& targets,
                                 int pad_id);

// Non-recording helpers.
std::size_t argmax_row(const Tensor& m, std::size_t row);
std::vector<double> softmax_values(const std::vector<double>& x);

}  // namespace gdr
