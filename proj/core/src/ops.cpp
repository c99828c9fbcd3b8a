#include "gdr/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "gdr/error.hpp"

namespace gdr {

namespace {

Tensor make_out(std::vector<std::size_t> shape, bool track) {
  Tensor t(std::move(shape));
  t.requires_grad = track;
  if (track) t.ensure_grad();
  return t;
}

bool track_for(const Tensor& a) { return grad_enabled() && a.requires_grad; }
bool track_for(const Tensor& a, const Tensor& b) {
  return grad_enabled() && (a.requires_grad || b.requires_grad);
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw std::invalid_argument(std::string(op) + ": expected rank-2 tensor, got " +
                                shape_string(t.shape));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape) +
                                " vs " + shape_string(b.shape));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions " + shape_string(a.shape) + " x " +
                                shape_string(b.shape) + " do not conform");
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = make_out({m, n}, track_for(a, b));
  const double* pa = a.data->data();
  const double* pb = b.data->data();
  double* po = out.data->data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      if (av == 0.0) continue;
      const double* brow = pb + l * n;
      double* orow = po + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  check_finite(out, "matmul output");
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a, b};
    out.node->backprop = [m, k, n](const Tensor& o) {
      const Tensor& pa = o.node->parents[0];
      const Tensor& pb = o.node->parents[1];
      const double* dout = o.grad->data();
      if (pa.requires_grad) {
        double* da = pa.grad->data();
        const double* bv = pb.data->data();
        // dA += dOut * B^T
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double d = dout[i * n + j];
            if (d == 0.0) continue;
            for (std::size_t l = 0; l < k; ++l) da[i * k + l] += d * bv[l * n + j];
          }
      }
      if (pb.requires_grad) {
        double* db = pb.grad->data();
        const double* av = pa.data->data();
        // dB += A^T * dOut
        for (std::size_t l = 0; l < k; ++l)
          for (std::size_t i = 0; i < m; ++i) {
            const double v = av[i * k + l];
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) db[l * n + j] += v * dout[i * n + j];
          }
      }
    };
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  Tensor out = make_out({c, r}, track_for(a));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(j, i) = a.at(i, j);
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a};
    out.node->backprop = [r, c](const Tensor& o) {
      const Tensor& p = o.node->parents[0];
      if (!p.requires_grad) return;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) (*p.grad)[i * c + j] += (*o.grad)[j * r + i];
    };
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = make_out(a.shape, track_for(a, b));
  for (std::size_t i = 0; i < out.size(); ++i) (*out.data)[i] = (*a.data)[i] + (*b.data)[i];
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a, b};
    out.node->backprop = [](const Tensor& o) {
      for (const Tensor& p : o.node->parents) {
        if (!p.requires_grad) continue;
        for (std::size_t i = 0; i < o.size(); ++i) (*p.grad)[i] += (*o.grad)[i];
      }
    };
  }
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor out = make_out(a.shape, track_for(a, b));
  for (std::size_t i = 0; i < out.size(); ++i) (*out.data)[i] = (*a.data)[i] - (*b.data)[i];
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a, b};
    out.node->backprop = [](const Tensor& o) {
      const Tensor& pa = o.node->parents[0];
      const Tensor& pb = o.node->parents[1];
      if (pa.requires_grad)
        for (std::size_t i = 0; i < o.size(); ++i) (*pa.grad)[i] += (*o.grad)[i];
      if (pb.requires_grad)
        for (std::size_t i = 0; i < o.size(); ++i) (*pb.grad)[i] -= (*o.grad)[i];
    };
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out = make_out(a.shape, track_for(a, b));
  for (std::size_t i = 0; i < out.size(); ++i) (*out.data)[i] = (*a.data)[i] * (*b.data)[i];
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a, b};
    out.node->backprop = [](const Tensor& o) {
      const Tensor& pa = o.node->parents[0];
      const Tensor& pb = o.node->parents[1];
      if (pa.requires_grad)
        for (std::size_t i = 0; i < o.size(); ++i) (*pa.grad)[i] += (*o.grad)[i] * (*pb.data)[i];
      if (pb.requires_grad)
        for (std::size_t i = 0; i < o.size(); ++i) (*pb.grad)[i] += (*o.grad)[i] * (*pa.data)[i];
    };
  }
  return out;
}

Tensor scale(const Tensor& a, double s) {
  Tensor out = make_out(a.shape, track_for(a));
  for (std::size_t i = 0; i < out.size(); ++i) (*out.data)[i] = (*a.data)[i] * s;
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a};
    out.node->backprop = [s](const Tensor& o) {
      const Tensor& p = o.node->parents[0];
      if (!p.requires_grad) return;
      for (std::size_t i = 0; i < o.size(); ++i) (*p.grad)[i] += (*o.grad)[i] * s;
    };
  }
  return out;
}

Tensor add_row_broadcast(const Tensor& m, const Tensor& row) {
  require_rank2(m, "add_row_broadcast");
  require_rank2(row, "add_row_broadcast");
  if (row.rows() != 1 || row.cols() != m.cols()) {
    throw std::invalid_argument("add_row_broadcast: bias " + shape_string(row.shape) +
                                " does not match matrix " + shape_string(m.shape));
  }
  const std::size_t r = m.rows(), c = m.cols();
  Tensor out = make_out({r, c}, track_for(m, row));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.at(i, j) = m.at(i, j) + (*row.data)[j];
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {m, row};
    out.node->backprop = [r, c](const Tensor& o) {
      const Tensor& pm = o.node->parents[0];
      const Tensor& pr = o.node->parents[1];
      if (pm.requires_grad)
        for (std::size_t i = 0; i < o.size(); ++i) (*pm.grad)[i] += (*o.grad)[i];
      if (pr.requires_grad)
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j) (*pr.grad)[j] += (*o.grad)[i * c + j];
    };
  }
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = make_out(a.shape, track_for(a));
  for (std::size_t i = 0; i < out.size(); ++i) (*out.data)[i] = std::max(0.0, (*a.data)[i]);
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a};
    out.node->backprop = [](const Tensor& o) {
      const Tensor& p = o.node->parents[0];
      if (!p.requires_grad) return;
      for (std::size_t i = 0; i < o.size(); ++i)
        if ((*p.data)[i] > 0.0) (*p.grad)[i] += (*o.grad)[i];
    };
  }
  return out;
}

Tensor tanh_activation(const Tensor& a) {
  Tensor out = make_out(a.shape, track_for(a));
  for (std::size_t i = 0; i < out.size(); ++i) (*out.data)[i] = std::tanh((*a.data)[i]);
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a};
    out.node->backprop = [](const Tensor& o) {
      const Tensor& p = o.node->parents[0];
      if (!p.requires_grad) return;
      for (std::size_t i = 0; i < o.size(); ++i) {
        const double y = (*o.data)[i];
        (*p.grad)[i] += (*o.grad)[i] * (1.0 - y * y);
      }
    };
  }
  return out;
}

Tensor row_softmax(const Tensor& a, const AttnMask* mask) {
  require_rank2(a, "row_softmax");
  const std::size_t r = a.rows(), c = a.cols();
  if (mask && mask->defined() && (mask->rows() != r || mask->cols() != c)) {
    throw std::invalid_argument("row_softmax: mask " + std::to_string(mask->rows()) + "x" +
                                std::to_string(mask->cols()) + " does not match logits " +
                                shape_string(a.shape));
  }
  const bool use_mask = mask && mask->defined();
  AttnMask mask_copy = use_mask ? *mask : AttnMask();
  Tensor out = make_out({r, c}, track_for(a));
  for (std::size_t i = 0; i < r; ++i) {
    double maxv = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      if (use_mask && !mask_copy.keep(i, j)) continue;
      maxv = std::max(maxv, a.at(i, j));
    }
    if (maxv == -std::numeric_limits<double>::infinity()) {
      throw NumericError("row_softmax: mask row " + std::to_string(i) + " has no attendable key");
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (use_mask && !mask_copy.keep(i, j)) {
        out.at(i, j) = 0.0;
        continue;
      }
      const double e = std::exp(a.at(i, j) - maxv);
      out.at(i, j) = e;
      sum += e;
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < c; ++j) {
      if (use_mask && !mask_copy.keep(i, j)) continue;
      out.at(i, j) *= inv;
    }
  }
  check_finite(out, "row_softmax output");
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a};
    out.node->backprop = [r, c, use_mask, mask_copy](const Tensor& o) {
      const Tensor& p = o.node->parents[0];
      if (!p.requires_grad) return;
      for (std::size_t i = 0; i < r; ++i) {
        double dsum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          if (use_mask && !mask_copy.keep(i, j)) continue;
          dsum += (*o.grad)[i * c + j] * (*o.data)[i * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) {
          if (use_mask && !mask_copy.keep(i, j)) continue;
          (*p.grad)[i * c + j] += (*o.data)[i * c + j] * ((*o.grad)[i * c + j] - dsum);
        }
      }
    };
  }
  return out;
}

Tensor mean_rows(const Tensor& a, std::size_t valid_rows) {
  require_rank2(a, "mean_rows");
  const std::size_t r = a.rows(), c = a.cols();
  const std::size_t n = valid_rows == 0 ? r : valid_rows;
  if (n > r) throw std::invalid_argument("mean_rows: valid_rows exceeds row count");
  if (n == 0) throw std::invalid_argument("mean_rows: no rows");
  Tensor out = make_out({1, c}, track_for(a));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) (*out.data)[j] += a.at(i, j);
  for (std::size_t j = 0; j < c; ++j) (*out.data)[j] /= static_cast<double>(n);
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a};
    out.node->backprop = [n, c](const Tensor& o) {
      const Tensor& p = o.node->parents[0];
      if (!p.requires_grad) return;
      const double inv = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) (*p.grad)[i * c + j] += (*o.grad)[j] * inv;
    };
  }
  return out;
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  bool track = false;
  for (const Tensor& p : parts) {
    require_rank2(p, "concat_cols");
    if (p.rows() != r) throw std::invalid_argument("concat_cols: row count mismatch");
    total += p.cols();
    track = track || track_for(p);
  }
  Tensor out = make_out({r, total}, track);
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out.at(i, offset + j) = p.at(i, j);
    offset += p.cols();
  }
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = parts;
    out.node->backprop = [r, total](const Tensor& o) {
      std::size_t offset = 0;
      for (const Tensor& p : o.node->parents) {
        const std::size_t c = p.cols();
        if (p.requires_grad) {
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j)
              (*p.grad)[i * c + j] += (*o.grad)[i * total + offset + j];
        }
        offset += c;
      }
    };
  }
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t first, std::size_t count) {
  require_rank2(a, "slice_cols");
  const std::size_t r = a.rows(), c = a.cols();
  if (count == 0 || first + count > c) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(first) + ", " +
                                std::to_string(first + count) + ") out of " + std::to_string(c));
  }
  Tensor out = make_out({r, count}, track_for(a));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < count; ++j) out.at(i, j) = a.at(i, first + j);
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {a};
    out.node->backprop = [r, c, first, count](const Tensor& o) {
      const Tensor& p = o.node->parents[0];
      if (!p.requires_grad) return;
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < count; ++j)
          (*p.grad)[i * c + first + j] += (*o.grad)[i * count + j];
    };
  }
  return out;
}

Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids) {
  require_rank2(table, "embedding_rows");
  if (ids.empty()) throw std::invalid_argument("embedding_rows: empty id list");
  const std::size_t v = table.rows(), h = table.cols();
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= v) {
      throw std::invalid_argument("embedding_rows: id " + std::to_string(id) +
                                  " out of range for table with " + std::to_string(v) + " rows");
    }
  }
  Tensor out = make_out({ids.size(), h}, track_for(table));
  for (std::size_t t = 0; t < ids.size(); ++t)
    for (std::size_t j = 0; j < h; ++j) out.at(t, j) = table.at(static_cast<std::size_t>(ids[t]), j);
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {table};
    std::vector<int> ids_copy = ids;
    out.node->backprop = [h, ids_copy](const Tensor& o) {
      const Tensor& p = o.node->parents[0];
      if (!p.requires_grad) return;
      for (std::size_t t = 0; t < ids_copy.size(); ++t) {
        const std::size_t row = static_cast<std::size_t>(ids_copy[t]);
        for (std::size_t j = 0; j < h; ++j) (*p.grad)[row * h + j] += (*o.grad)[t * h + j];
      }
    };
  }
  return out;
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_rank2(x, "layer_norm_rows");
  const std::size_t r = x.rows(), c = x.cols();
  if (gain.shape != std::vector<std::size_t>{1, c} || bias.shape != std::vector<std::size_t>{1, c}) {
    throw std::invalid_argument("layer_norm_rows: gain/bias must be [1, " + std::to_string(c) + "]");
  }
  const bool track = grad_enabled() && (x.requires_grad || gain.requires_grad || bias.requires_grad);
  Tensor out = make_out({r, c}, track);
  std::vector<double> inv_sigma(r), normalized(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += x.at(i, j);
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = x.at(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    const double inv = 1.0 / std::sqrt(var + eps);
    inv_sigma[i] = inv;
    for (std::size_t j = 0; j < c; ++j) {
      const double xi = (x.at(i, j) - mean) * inv;
      normalized[i * c + j] = xi;
      out.at(i, j) = xi * (*gain.data)[j] + (*bias.data)[j];
    }
  }
  check_finite(out, "layer_norm_rows output");
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {x, gain, bias};
    out.node->backprop = [r, c, inv_sigma, normalized](const Tensor& o) {
      const Tensor& px = o.node->parents[0];
      const Tensor& pg = o.node->parents[1];
      const Tensor& pb = o.node->parents[2];
      for (std::size_t i = 0; i < r; ++i) {
        if (pg.requires_grad || pb.requires_grad) {
          for (std::size_t j = 0; j < c; ++j) {
            const double dy = (*o.grad)[i * c + j];
            if (pg.requires_grad) (*pg.grad)[j] += dy * normalized[i * c + j];
            if (pb.requires_grad) (*pb.grad)[j] += dy;
          }
        }
        if (px.requires_grad) {
          double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            const double dxhat = (*o.grad)[i * c + j] * (*pg.data)[j];
            mean_dxhat += dxhat;
            mean_dxhat_xhat += dxhat * normalized[i * c + j];
          }
          mean_dxhat /= static_cast<double>(c);
          mean_dxhat_xhat /= static_cast<double>(c);
          for (std::size_t j = 0; j < c; ++j) {
            const double dxhat = (*o.grad)[i * c + j] * (*pg.data)[j];
            (*px.grad)[i * c + j] +=
                inv_sigma[i] * (dxhat - mean_dxhat - normalized[i * c + j] * mean_dxhat_xhat);
          }
        }
      }
    };
  }
  return out;
}

Tensor cross_entropy_with_logits(const Tensor& logits, const std::vector<int>& targets,
                                 int pad_id) {
  require_rank2(logits, "cross_entropy_with_logits");
  const std::size_t t = logits.rows(), v = logits.cols();
  if (targets.size() != t) {
    throw std::invalid_argument("cross_entropy_with_logits: " + std::to_string(targets.size()) +
                                " targets for " + std::to_string(t) + " logit rows");
  }
  std::size_t live = 0;
  for (int id : targets) {
    if (id == pad_id) continue;
    if (id < 0 || static_cast<std::size_t>(id) >= v) {
      throw std::invalid_argument("cross_entropy_with_logits: target " + std::to_string(id) +
                                  " out of range for vocabulary of " + std::to_string(v));
    }
    ++live;
  }
  if (live == 0) {
    throw std::invalid_argument("cross_entropy_with_logits: all positions padded");
  }
  Tensor out = make_out({1, 1}, track_for(logits));
  double total = 0.0;
  for (std::size_t i = 0; i < t; ++i) {
    if (targets[i] == pad_id) continue;
    double maxv = logits.at(i, 0);
    for (std::size_t j = 1; j < v; ++j) maxv = std::max(maxv, logits.at(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < v; ++j) sum += std::exp(logits.at(i, j) - maxv);
    total += maxv + std::log(sum) - logits.at(i, static_cast<std::size_t>(targets[i]));
  }
  (*out.data)[0] = total / static_cast<double>(live);
  check_finite(out, "cross_entropy loss");
  if (out.requires_grad) {
    out.node = std::make_shared<Node>();
    out.node->parents = {logits};
    std::vector<int> targets_copy = targets;
    out.node->backprop = [t, v, live, targets_copy, pad_id](const Tensor& o) {
      const Tensor& p = o.node->parents[0];
      if (!p.requires_grad) return;
      const double upstream = (*o.grad)[0] / static_cast<double>(live);
      for (std::size_t i = 0; i < t; ++i) {
        if (targets_copy[i] == pad_id) continue;
        double maxv = (*p.data)[i * v];
        for (std::size_t j = 1; j < v; ++j) maxv = std::max(maxv, (*p.data)[i * v + j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < v; ++j) sum += std::exp((*p.data)[i * v + j] - maxv);
        const double inv = 1.0 / sum;
        for (std::size_t j = 0; j < v; ++j) {
          double soft = std::exp((*p.data)[i * v + j] - maxv) * inv;
          if (j == static_cast<std::size_t>(targets_copy[i])) soft -= 1.0;
          (*p.grad)[i * v + j] += upstream * soft;
        }
      }
    };
  }
  return out;
}

std::size_t argmax_row(const Tensor& m, std::size_t row) {
  const std::size_t c = m.cols();
  std::size_t best = 0;
  double best_value = m.at(row, 0);
  for (std::size_t j = 1; j < c; ++j) {
    if (m.at(row, j) > best_value) {
      best_value = m.at(row, j);
      best = j;
    }
  }
  return best;
}

std::vector<double> softmax_values(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("softmax: empty input");
  check_finite(x, "softmax input");
  const double maxv = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - maxv);
    sum += out[i];
  }
  const double inv = 1.0 / sum;
  for (double& v : out) v *= inv;
  return out;
}

}  // namespace gdr
