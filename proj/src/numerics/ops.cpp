#include "hrgc/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hrgc/errors.hpp"

namespace hrgc {

namespace {

template <typename Real>
using Node = TensorNode<Real>;

struct Extents {
  std::size_t rows;
  std::size_t cols;
};

template <typename Real>
Extents extents(const Tensor<Real>& t, const char* op) {
  if (t.rank() > 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_to_string(t.shape()));
  }
  return {t.rows(), t.cols()};
}

// Grad buffer of a parent, or nullptr when that parent is not tracked.
template <typename Real>
Real* grad_of(Node<Real>& node) {
  if (!node.requires_grad) return nullptr;
  node.ensure_grad();
  return node.grad.data();
}

template <typename Real>
void require_same_shape(const Tensor<Real>& a, const Tensor<Real>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
                     shape_to_string(b.shape()));
  }
}

template <typename Real, typename Fn, typename Deriv>
Tensor<Real> unary(const Tensor<Real>& t, Fn fn, Deriv deriv) {
  std::vector<Real> out(t.numel());
  const auto in = t.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fn(in[i]);
  // deriv(x, y) is dy/dx in terms of input x and output y.
  return Tensor<Real>::make_result(t.shape(), std::move(out), {t}, [deriv](Node<Real>& self) {
    Node<Real>& p = *self.parents[0];
    Real* g = grad_of(p);
    if (!g) return;
    for (std::size_t i = 0; i < self.value.size(); ++i) g[i] += self.grad[i] * deriv(p.value[i], self.value[i]);
  });
}

}  // namespace

template <typename Real>
Tensor<Real> matmul(const Tensor<Real>& a, const Tensor<Real>& b) {
  const auto [m, k] = extents(a, "matmul");
  const auto [k2, n] = extents(b, "matmul");
  if (k != k2) {
    throw ShapeError("matmul: inner dimensions disagree, " + shape_to_string(a.shape()) + " x " +
                     shape_to_string(b.shape()));
  }
  std::vector<Real> out(m * n, Real(0));
  const Real* av = a.values().data();
  const Real* bv = b.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    Real* orow = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real aip = av[i * k + p];
      const Real* brow = bv + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return Tensor<Real>::make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node<Real>& self) {
    Node<Real>& pa = *self.parents[0];
    Node<Real>& pb = *self.parents[1];
    const Real* dc = self.grad.data();
    if (Real* da = grad_of(pa)) {
      // dA = dC * B^T
      const Real* bv = pb.value.data();
      for (std::size_t i = 0; i < m; ++i) {
        const Real* dcrow = dc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const Real* brow = bv + p * n;
          Real acc = 0;
          for (std::size_t j = 0; j < n; ++j) acc += dcrow[j] * brow[j];
          da[i * k + p] += acc;
        }
      }
    }
    if (Real* db = grad_of(pb)) {
      // dB = A^T * dC
      const Real* av = pa.value.data();
      for (std::size_t i = 0; i < m; ++i) {
        const Real* dcrow = dc + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const Real aip = av[i * k + p];
          Real* dbrow = db + p * n;
          for (std::size_t j = 0; j < n; ++j) dbrow[j] += aip * dcrow[j];
        }
      }
    }
  });
}

template <typename Real>
Tensor<Real> transpose(const Tensor<Real>& a) {
  const auto [m, n] = extents(a, "transpose");
  std::vector<Real> out(m * n);
  const auto in = a.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
  }
  return Tensor<Real>::make_result({n, m}, std::move(out), {a}, [m, n](Node<Real>& self) {
    Real* g = grad_of(*self.parents[0]);
    if (!g) return;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[j * m + i];
    }
  });
}

template <typename Real>
Tensor<Real> add(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "add");
  std::vector<Real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a, b}, [](Node<Real>& self) {
    for (auto& parent : self.parents) {
      if (Real* g = grad_of(*parent)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

template <typename Real>
Tensor<Real> sub(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "sub");
  std::vector<Real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a, b}, [](Node<Real>& self) {
    if (Real* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (Real* g = grad_of(*self.parents[1])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename Real>
Tensor<Real> mul(const Tensor<Real>& a, const Tensor<Real>& b) {
  require_same_shape(a, b, "mul");
  std::vector<Real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a, b}, [](Node<Real>& self) {
    Node<Real>& pa = *self.parents[0];
    Node<Real>& pb = *self.parents[1];
    if (Real* g = grad_of(pa)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (Real* g = grad_of(pb)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

template <typename Real>
Tensor<Real> scale(const Tensor<Real>& a, Real factor) {
  std::vector<Real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
  return Tensor<Real>::make_result(a.shape(), std::move(out), {a}, [factor](Node<Real>& self) {
    if (Real* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * factor;
    }
  });
}

template <typename Real>
Tensor<Real> add_row_broadcast(const Tensor<Real>& m, const Tensor<Real>& bias) {
  const auto [r, c] = extents(m, "add_row_broadcast");
  if (bias.numel() != c) {
    throw ShapeError("add_row_broadcast: bias " + shape_to_string(bias.shape()) + " does not match " +
                     shape_to_string(m.shape()));
  }
  std::vector<Real> out(m.values().begin(), m.values().end());
  const auto b = bias.values();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += b[j];
  }
  return Tensor<Real>::make_result(m.shape(), std::move(out), {m, bias}, [r, c](Node<Real>& self) {
    if (Real* g = grad_of(*self.parents[0])) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (Real* g = grad_of(*self.parents[1])) {
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[i * c + j];
      }
    }
  });
}

template <typename Real>
Tensor<Real> sigmoid(const Tensor<Real>& t) {
  return unary(
      t,
      [](Real x) {
        if (x >= 0) return Real(1) / (Real(1) + std::exp(-x));
        const Real e = std::exp(x);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

template <typename Real>
Tensor<Real> tanh_act(const Tensor<Real>& t) {
  return unary(
      t, [](Real x) { return std::tanh(x); }, [](Real, Real y) { return Real(1) - y * y; });
}

template <typename Real>
Tensor<Real> relu(const Tensor<Real>& t) {
  return unary(
      t, [](Real x) { return x > 0 ? x : Real(0); }, [](Real x, Real) { return x > 0 ? Real(1) : Real(0); });
}

template <typename Real>
Tensor<Real> softmax_rows(const Tensor<Real>& m) {
  const auto [r, c] = extents(m, "softmax_rows");
  std::vector<Real> out(r * c);
  const auto in = m.values();
  for (std::size_t i = 0; i < r; ++i) {
    const Real* x = in.data() + i * c;
    Real* y = out.data() + i * c;
    const Real mx = *std::max_element(x, x + c);
    Real total = 0;
    for (std::size_t j = 0; j < c; ++j) {
      y[j] = std::exp(x[j] - mx);
      total += y[j];
    }
    for (std::size_t j = 0; j < c; ++j) y[j] /= total;
  }
  return Tensor<Real>::make_result(m.shape(), std::move(out), {m}, [r, c](Node<Real>& self) {
    Real* g = grad_of(*self.parents[0]);
    if (!g) return;
    for (std::size_t i = 0; i < r; ++i) {
      const Real* y = self.value.data() + i * c;
      const Real* gy = self.grad.data() + i * c;
      Real dot = 0;
      for (std::size_t j = 0; j < c; ++j) dot += gy[j] * y[j];
      for (std::size_t j = 0; j < c; ++j) g[i * c + j] += y[j] * (gy[j] - dot);
    }
  });
}

template <typename Real>
Tensor<Real> layer_norm(const Tensor<Real>& z, const Tensor<Real>& gain, const Tensor<Real>& bias, Real eps) {
  const auto [r, c] = extents(z, "layer_norm");
  if (gain.numel() != c || bias.numel() != c) {
    throw ShapeError("layer_norm: gain/bias must have " + std::to_string(c) + " entries, got " +
                     shape_to_string(gain.shape()) + " and " + shape_to_string(bias.shape()));
  }
  // Normalized rows and per-row 1/sigma are kept for the backward pass.
  auto normalized = std::make_shared<std::vector<Real>>(r * c);
  auto inv_sigma = std::make_shared<std::vector<Real>>(r);
  std::vector<Real> out(r * c);
  const auto in = z.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  for (std::size_t i = 0; i < r; ++i) {
    const Real* x = in.data() + i * c;
    Real mu = 0;
    for (std::size_t j = 0; j < c; ++j) mu += x[j];
    mu /= static_cast<Real>(c);
    Real var = 0;
    for (std::size_t j = 0; j < c; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= static_cast<Real>(c);
    const Real inv = Real(1) / std::sqrt(var + eps);
    (*inv_sigma)[i] = inv;
    for (std::size_t j = 0; j < c; ++j) {
      const Real xhat = (x[j] - mu) * inv;
      (*normalized)[i * c + j] = xhat;
      out[i * c + j] = gv[j] * xhat + bv[j];
    }
  }
  return Tensor<Real>::make_result(
      z.shape(), std::move(out), {z, gain, bias}, [r, c, normalized, inv_sigma](Node<Real>& self) {
        const Real* gy = self.grad.data();
        const std::vector<Real>& xhat = *normalized;
        const std::vector<Real>& gain_v = self.parents[1]->value;
        if (Real* gg = grad_of(*self.parents[1])) {
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) gg[j] += gy[i * c + j] * xhat[i * c + j];
          }
        }
        if (Real* gb = grad_of(*self.parents[2])) {
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) gb[j] += gy[i * c + j];
          }
        }
        if (Real* gz = grad_of(*self.parents[0])) {
          const Real n = static_cast<Real>(c);
          for (std::size_t i = 0; i < r; ++i) {
            Real mean_d = 0;
            Real mean_dx = 0;
            for (std::size_t j = 0; j < c; ++j) {
              const Real d = gy[i * c + j] * gain_v[j];
              mean_d += d;
              mean_dx += d * xhat[i * c + j];
            }
            mean_d /= n;
            mean_dx /= n;
            const Real inv = (*inv_sigma)[i];
            for (std::size_t j = 0; j < c; ++j) {
              const Real d = gy[i * c + j] * gain_v[j];
              gz[i * c + j] += inv * (d - mean_d - xhat[i * c + j] * mean_dx);
            }
          }
        }
      });
}

template <typename Real>
Tensor<Real> concat_cols(const std::vector<Tensor<Real>>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: no inputs");
  const std::size_t r = extents(parts[0], "concat_cols").rows;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const auto e = extents(p, "concat_cols");
    if (e.rows != r) {
      throw ShapeError("concat_cols: row counts differ, " + shape_to_string(parts[0].shape()) + " vs " +
                       shape_to_string(p.shape()));
    }
    widths.push_back(e.cols);
    total += e.cols;
  }
  std::vector<Real> out(r * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].values();
    for (std::size_t i = 0; i < r; ++i) {
      std::copy_n(v.data() + i * widths[k], widths[k], out.data() + i * total + offset);
    }
    offset += widths[k];
  }
  return Tensor<Real>::make_result({r, total}, std::move(out), parts, [r, total, widths](Node<Real>& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (Real* g = grad_of(*self.parents[k])) {
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < widths[k]; ++j) g[i * widths[k] + j] += self.grad[i * total + offset + j];
        }
      }
      offset += widths[k];
    }
  });
}

template <typename Real>
Tensor<Real> slice_cols(const Tensor<Real>& m, std::size_t begin, std::size_t end) {
  const auto [r, c] = extents(m, "slice_cols");
  if (begin >= end || end > c) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") invalid for " + shape_to_string(m.shape()));
  }
  const std::size_t w = end - begin;
  std::vector<Real> out(r * w);
  const auto v = m.values();
  for (std::size_t i = 0; i < r; ++i) std::copy_n(v.data() + i * c + begin, w, out.data() + i * w);
  return Tensor<Real>::make_result({r, w}, std::move(out), {m}, [r, c, w, begin](Node<Real>& self) {
    Real* g = grad_of(*self.parents[0]);
    if (!g) return;
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < w; ++j) g[i * c + begin + j] += self.grad[i * w + j];
    }
  });
}

template <typename Real>
Tensor<Real> row(const Tensor<Real>& m, std::size_t r) {
  const auto [rows, c] = extents(m, "row");
  if (r >= rows) {
    throw ShapeError("row: index " + std::to_string(r) + " out of range for " + shape_to_string(m.shape()));
  }
  std::vector<Real> out(m.values().begin() + static_cast<std::ptrdiff_t>(r * c),
                        m.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * c));
  return Tensor<Real>::make_result({1, c}, std::move(out), {m}, [r, c](Node<Real>& self) {
    Real* g = grad_of(*self.parents[0]);
    if (!g) return;
    for (std::size_t j = 0; j < c; ++j) g[r * c + j] += self.grad[j];
  });
}

template <typename Real>
Tensor<Real> stack_rows(const std::vector<Tensor<Real>>& rows) {
  if (rows.empty()) throw ContractError("stack_rows: no inputs");
  const std::size_t c = rows[0].numel();
  std::vector<Real> out;
  out.reserve(rows.size() * c);
  for (const auto& r : rows) {
    if (r.numel() != c || extents(r, "stack_rows").rows != 1) {
      throw ShapeError("stack_rows: expected 1x" + std::to_string(c) + " rows, got " + shape_to_string(r.shape()));
    }
    out.insert(out.end(), r.values().begin(), r.values().end());
  }
  return Tensor<Real>::make_result({rows.size(), c}, std::move(out), rows, [c](Node<Real>& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      if (Real* g = grad_of(*self.parents[k])) {
        for (std::size_t j = 0; j < c; ++j) g[j] += self.grad[k * c + j];
      }
    }
  });
}

template <typename Real>
Tensor<Real> sum(const Tensor<Real>& t) {
  Real total = 0;
  for (Real v : t.values()) total += v;
  return Tensor<Real>::make_result({1}, {total}, {t}, [](Node<Real>& self) {
    Real* g = grad_of(*self.parents[0]);
    if (!g) return;
    const Real d = self.grad[0];
    for (std::size_t i = 0; i < self.parents[0]->value.size(); ++i) g[i] += d;
  });
}

template <typename Real>
Tensor<Real> mean(const Tensor<Real>& t) {
  return scale(sum(t), Real(1) / static_cast<Real>(t.numel()));
}

template <typename Real>
Tensor<Real> mse_loss(const Tensor<Real>& prediction, const Tensor<Real>& target) {
  if (prediction.numel() != target.numel()) {
    throw ShapeError("mse_loss: shape mismatch " + shape_to_string(prediction.shape()) + " vs " +
                     shape_to_string(target.shape()));
  }
  const std::size_t n = prediction.numel();
  Real total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real d = prediction.values()[i] - target.values()[i];
    total += d * d;
  }
  return Tensor<Real>::make_result({1}, {total / static_cast<Real>(n)}, {prediction, target}, [n](Node<Real>& self) {
    Node<Real>& p = *self.parents[0];
    Node<Real>& t = *self.parents[1];
    const Real k = Real(2) * self.grad[0] / static_cast<Real>(n);
    Real* gp = grad_of(p);
    Real* gt = grad_of(t);
    for (std::size_t i = 0; i < n; ++i) {
      const Real d = k * (p.value[i] - t.value[i]);
      if (gp) gp[i] += d;
      if (gt) gt[i] -= d;
    }
  });
}

template <typename Real>
Tensor<Real> dropout(const Tensor<Real>& t, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout: rate must lie in [0, 1)");
  if (rate == 0.0) return t;
  const Real keep_scale = static_cast<Real>(1.0 / (1.0 - rate));
  auto mask = std::make_shared<std::vector<Real>>(t.numel());
  std::vector<Real> out(t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = rng.uniform() < rate ? Real(0) : keep_scale;
    out[i] = t.values()[i] * (*mask)[i];
  }
  return Tensor<Real>::make_result(t.shape(), std::move(out), {t}, [mask](Node<Real>& self) {
    Real* g = grad_of(*self.parents[0]);
    if (!g) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * (*mask)[i];
  });
}

#define HRGC_INSTANTIATE_OPS(Real)                                                                          \
  template Tensor<Real> matmul(const Tensor<Real>&, const Tensor<Real>&);                                   \
  template Tensor<Real> transpose(const Tensor<Real>&);                                                     \
  template Tensor<Real> add(const Tensor<Real>&, const Tensor<Real>&);                                      \
  template Tensor<Real> sub(const Tensor<Real>&, const Tensor<Real>&);                                      \
  template Tensor<Real> mul(const Tensor<Real>&, const Tensor<Real>&);                                      \
  template Tensor<Real> scale(const Tensor<Real>&, Real);                                                   \
  template Tensor<Real> add_row_broadcast(const Tensor<Real>&, const Tensor<Real>&);                        \
  template Tensor<Real> sigmoid(const Tensor<Real>&);                                                       \
  template Tensor<Real> tanh_act(const Tensor<Real>&);                                                      \
  template Tensor<Real> relu(const Tensor<Real>&);                                                          \
  template Tensor<Real> softmax_rows(const Tensor<Real>&);                                                  \
  template Tensor<Real> layer_norm(const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&, Real);    \
  template Tensor<Real> concat_cols(const std::vector<Tensor<Real>>&);                                      \
  template Tensor<Real> slice_cols(const Tensor<Real>&, std::size_t, std::size_t);                          \
  template Tensor<Real> row(const Tensor<Real>&, std::size_t);                                              \
  template Tensor<Real> stack_rows(const std::vector<Tensor<Real>>&);                                       \
  template Tensor<Real> sum(const Tensor<Real>&);                                                           \
  template Tensor<Real> mean(const Tensor<Real>&);                                                          \
  template Tensor<Real> mse_loss(const Tensor<Real>&, const Tensor<Real>&);                                 \
  template Tensor<Real> dropout(const Tensor<Real>&, double, Rng&);

HRGC_INSTANTIATE_OPS(float)
HRGC_INSTANTIATE_OPS(double)

}  // namespace hrgc
