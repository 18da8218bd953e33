#include "tpn2f/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tpn2f/error.hpp"

namespace tpn2f {

namespace {

using detail::ImplPtr;
using detail::TensorImpl;
using Inputs = std::span<const ImplPtr>;

Tensor finish(Shape shape, std::vector<double> values, std::span<const Tensor> inputs,
              const char* op, GradientTape::BackwardFn fn) {
  Tensor out = Tensor::from(std::move(shape), std::move(values));
  auto* tape = GradientTape::active();
  if (tape == nullptr) return out;
  bool any = std::any_of(inputs.begin(), inputs.end(),
                         [](const Tensor& t) { return t.requires_grad(); });
  if (!any) return out;
  std::vector<ImplPtr> impls;
  impls.reserve(inputs.size());
  for (const auto& t : inputs) impls.push_back(t.impl());
  tape->record(op, std::move(impls), out.impl(), std::move(fn));
  return out;
}

Tensor finish(Shape shape, std::vector<double> values, std::initializer_list<Tensor> inputs,
              const char* op, GradientTape::BackwardFn fn) {
  return finish(std::move(shape), std::move(values),
                std::span<const Tensor>(inputs.begin(), inputs.size()), op, std::move(fn));
}

// Grad buffer of an input, or nullptr when it does not take gradient.
double* grad_of(const ImplPtr& p) { return p->requires_grad ? p->grad.data() : nullptr; }
const double* data_of(const ImplPtr& p) { return p->data->data(); }

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  if (alpha == 0.0) return;
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

std::size_t last_extent(const Tensor& t) { return t.shape().back(); }

}  // namespace

Tensor reshape(const Tensor& t, Shape shape) {
  if (shape_numel(shape) != t.numel()) {
    throw DimensionError("cannot reshape " + shape_str(t.shape()) + " to " + shape_str(shape));
  }
  // Shares the data buffer; only metadata changes.
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = t.impl()->data;
  Tensor out(std::move(impl));
  auto* tape = GradientTape::active();
  if (tape != nullptr && t.requires_grad()) {
    tape->record("reshape", {t.impl()}, out.impl(), [](TensorImpl& o, Inputs in) {
      double* g = grad_of(in[0]);
      for (std::size_t i = 0; i < o.grad.size(); ++i) g[i] += o.grad[i];
    });
  }
  return out;
}

Tensor flatten(const Tensor& t) { return reshape(t, {t.numel()}); }

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || (b.rank() != 1 && b.rank() != 2) || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1);
  const std::size_t n = b.rank() == 2 ? b.dim(1) : 1;
  const bool vec = b.rank() == 1;
  std::vector<double> out(m * n, 0.0);
  const double* A = a.data().data();
  const double* Bm = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    if (vec) {
      out[i] = dot(A + i * k, Bm, k);
    } else {
      for (std::size_t p = 0; p < k; ++p) axpy(A[i * k + p], Bm + p * n, out.data() + i * n, n);
    }
  }
  Shape shape = vec ? Shape{m} : Shape{m, n};
  return finish(std::move(shape), std::move(out), {a, b}, "matmul",
                [m, k, n](TensorImpl& o, Inputs in) {
                  const double* g = o.grad.data();
                  const double* A = data_of(in[0]);
                  const double* Bm = data_of(in[1]);
                  if (double* da = grad_of(in[0])) {
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t p = 0; p < k; ++p) da[i * k + p] += dot(g + i * n, Bm + p * n, n);
                  }
                  if (double* db = grad_of(in[1])) {
                    for (std::size_t i = 0; i < m; ++i)
                      for (std::size_t p = 0; p < k; ++p) axpy(A[i * k + p], g + i * n, db + p * n, n);
                  }
                });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  if (weight.rank() != 2 || x.rank() < 1 || last_extent(x) != weight.dim(1)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " incompatible with weight " +
                         shape_str(weight.shape()));
  }
  const std::size_t in_dim = weight.dim(1), out_dim = weight.dim(0);
  const bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != out_dim)) {
    throw DimensionError("linear: bias " + shape_str(bias.shape()) + " does not match weight " +
                         shape_str(weight.shape()));
  }
  const std::size_t rows = x.numel() / in_dim;
  std::vector<double> out(rows * out_dim);
  const double* X = x.data().data();
  const double* W = weight.data().data();
  const double* b = has_bias ? bias.data().data() : nullptr;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t o = 0; o < out_dim; ++o) {
      out[r * out_dim + o] = dot(X + r * in_dim, W + o * in_dim, in_dim) + (b ? b[o] : 0.0);
    }
  }
  Shape shape = x.shape();
  shape.back() = out_dim;
  auto fn = [rows, in_dim, out_dim, has_bias](TensorImpl& o, Inputs in) {
    const double* g = o.grad.data();
    const double* X = data_of(in[0]);
    const double* W = data_of(in[1]);
    double* dx = grad_of(in[0]);
    double* dw = grad_of(in[1]);
    double* db = has_bias ? grad_of(in[2]) : nullptr;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* gr = g + r * out_dim;
      for (std::size_t oi = 0; oi < out_dim; ++oi) {
        const double go = gr[oi];
        if (go == 0.0) continue;
        if (dx) axpy(go, W + oi * in_dim, dx + r * in_dim, in_dim);
        if (dw) axpy(go, X + r * in_dim, dw + oi * in_dim, in_dim);
        if (db) db[oi] += go;
      }
    }
  };
  if (has_bias) return finish(std::move(shape), std::move(out), {x, weight, bias}, "linear", fn);
  return finish(std::move(shape), std::move(out), {x, weight}, "linear", fn);
}

Tensor outer_product(const Tensor& a, const Tensor& b) {
  if (a.rank() != 1 || b.rank() != 1) {
    throw DimensionError("outer_product: expected vectors, got " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), n = b.dim(0);
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a[i] * b[j];
  return finish({m, n}, std::move(out), {a, b}, "outer_product", [m, n](TensorImpl& o, Inputs in) {
    const double* g = o.grad.data();
    if (double* da = grad_of(in[0])) {
      for (std::size_t i = 0; i < m; ++i) da[i] += dot(g + i * n, data_of(in[1]), n);
    }
    if (double* db = grad_of(in[1])) {
      for (std::size_t i = 0; i < m; ++i) axpy(data_of(in[0])[i], g + i * n, db, n);
    }
  });
}

Tensor batched_outer(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw DimensionError("batched_outer: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t batch = a.dim(0), m = a.dim(1), n = b.dim(1);
  std::vector<double> out(batch * m * n);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t s = 0; s < batch; ++s)
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) out[(s * m + i) * n + j] = A[s * m + i] * B[s * n + j];
  return finish({batch, m, n}, std::move(out), {a, b}, "batched_outer",
                [batch, m, n](TensorImpl& o, Inputs in) {
                  const double* g = o.grad.data();
                  const double* A = data_of(in[0]);
                  const double* B = data_of(in[1]);
                  double* da = grad_of(in[0]);
                  double* db = grad_of(in[1]);
                  for (std::size_t s = 0; s < batch; ++s) {
                    for (std::size_t i = 0; i < m; ++i) {
                      const double* gi = g + (s * m + i) * n;
                      if (da) da[s * m + i] += dot(gi, B + s * n, n);
                      if (db) axpy(A[s * m + i], gi, db + s * n, n);
                    }
                  }
                });
}

Tensor contract_last(const Tensor& t, const Tensor& v) {
  if (v.rank() != 1 || t.rank() < 1 || last_extent(t) != v.dim(0)) {
    throw DimensionError("contract_last: " + shape_str(t.shape()) + " cannot contract with " +
                         shape_str(v.shape()));
  }
  const std::size_t n = v.dim(0);
  const std::size_t rows = t.numel() / n;
  std::vector<double> out(rows);
  const double* T = t.data().data();
  const double* V = v.data().data();
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot(T + r * n, V, n);
  Shape shape(t.shape().begin(), t.shape().end() - 1);
  if (shape.empty()) shape = {1};
  return finish(std::move(shape), std::move(out), {t, v}, "contract_last",
                [rows, n](TensorImpl& o, Inputs in) {
                  const double* g = o.grad.data();
                  const double* T = data_of(in[0]);
                  const double* V = data_of(in[1]);
                  double* dt = grad_of(in[0]);
                  double* dv = grad_of(in[1]);
                  for (std::size_t r = 0; r < rows; ++r) {
                    if (dt) axpy(g[r], V, dt + r * n, n);
                    if (dv) axpy(g[r], T + r * n, dv, n);
                  }
                });
}

Tensor batched_contract_last(const Tensor& t, const Tensor& v) {
  if (v.rank() != 2 || t.rank() < 3 || t.dim(0) != v.dim(0) || last_extent(t) != v.dim(1)) {
    throw DimensionError("batched_contract_last: " + shape_str(t.shape()) +
                         " cannot contract with " + shape_str(v.shape()));
  }
  const std::size_t batch = v.dim(0), n = v.dim(1);
  const std::size_t rows = t.numel() / (batch * n);
  std::vector<double> out(batch * rows);
  const double* T = t.data().data();
  const double* V = v.data().data();
  for (std::size_t s = 0; s < batch; ++s)
    for (std::size_t r = 0; r < rows; ++r)
      out[s * rows + r] = dot(T + (s * rows + r) * n, V + s * n, n);
  Shape shape(t.shape().begin(), t.shape().end() - 1);
  return finish(std::move(shape), std::move(out), {t, v}, "batched_contract_last",
                [batch, rows, n](TensorImpl& o, Inputs in) {
                  const double* g = o.grad.data();
                  const double* T = data_of(in[0]);
                  const double* V = data_of(in[1]);
                  double* dt = grad_of(in[0]);
                  double* dv = grad_of(in[1]);
                  for (std::size_t s = 0; s < batch; ++s) {
                    for (std::size_t r = 0; r < rows; ++r) {
                      const double gr = g[s * rows + r];
                      if (dt) axpy(gr, V + s * n, dt + (s * rows + r) * n, n);
                      if (dv) axpy(gr, T + (s * rows + r) * n, dv + s * n, n);
                    }
                  }
                });
}

Tensor weighted_sum(const Tensor& weights, const Tensor& values) {
  if (weights.rank() != 2 || values.rank() != 3 || weights.dim(0) != values.dim(0) ||
      weights.dim(1) != values.dim(1)) {
    throw DimensionError("weighted_sum: weights " + shape_str(weights.shape()) +
                         " incompatible with values " + shape_str(values.shape()));
  }
  const std::size_t batch = values.dim(0), len = values.dim(1), d = values.dim(2);
  std::vector<double> out(batch * d, 0.0);
  const double* W = weights.data().data();
  const double* V = values.data().data();
  for (std::size_t s = 0; s < batch; ++s)
    for (std::size_t l = 0; l < len; ++l) axpy(W[s * len + l], V + (s * len + l) * d, out.data() + s * d, d);
  return finish({batch, d}, std::move(out), {weights, values}, "weighted_sum",
                [batch, len, d](TensorImpl& o, Inputs in) {
                  const double* g = o.grad.data();
                  const double* W = data_of(in[0]);
                  const double* V = data_of(in[1]);
                  double* dw = grad_of(in[0]);
                  double* dv = grad_of(in[1]);
                  for (std::size_t s = 0; s < batch; ++s) {
                    for (std::size_t l = 0; l < len; ++l) {
                      if (dw) dw[s * len + l] += dot(g + s * d, V + (s * len + l) * d, d);
                      if (dv) axpy(W[s * len + l], g + s * d, dv + (s * len + l) * d, d);
                    }
                  }
                });
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("stack: no tensors given");
  const Shape& part_shape = parts[0].shape();
  for (const auto& p : parts) {
    if (p.shape() != part_shape) {
      throw DimensionError("stack: shape mismatch " + shape_str(part_shape) + " vs " +
                           shape_str(p.shape()));
    }
  }
  const std::size_t count = parts.size();
  // outer = leading extent kept before the new axis (1 for order-1 parts).
  const std::size_t outer = part_shape.size() == 1 ? 1 : part_shape[0];
  const std::size_t inner = parts[0].numel() / outer;
  std::vector<double> out(outer * count * inner);
  for (std::size_t l = 0; l < count; ++l) {
    const double* src = parts[l].data().data();
    for (std::size_t s = 0; s < outer; ++s)
      std::copy_n(src + s * inner, inner, out.begin() + (s * count + l) * inner);
  }
  Shape shape;
  if (part_shape.size() == 1) {
    shape = {count, part_shape[0]};
  } else {
    shape = {outer, count};
    shape.insert(shape.end(), part_shape.begin() + 1, part_shape.end());
  }
  return finish(std::move(shape), std::move(out), parts, "stack",
                [outer, count, inner](TensorImpl& o, Inputs in) {
                  for (std::size_t l = 0; l < count; ++l) {
                    double* dp = grad_of(in[l]);
                    if (!dp) continue;
                    for (std::size_t s = 0; s < outer; ++s) {
                      const double* g = o.grad.data() + (s * count + l) * inner;
                      for (std::size_t i = 0; i < inner; ++i) dp[s * inner + i] += g[i];
                    }
                  }
                });
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat: no tensors given");
  const Shape& first = parts[0].shape();
  const std::size_t rows = parts[0].numel() / first.back();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size() || !std::equal(s.begin(), s.end() - 1, first.begin())) {
      throw DimensionError("concat: leading shape mismatch " + shape_str(first) + " vs " +
                           shape_str(s));
    }
    widths.push_back(s.back());
    total += s.back();
  }
  std::vector<double> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const double* src = parts[k].data().data();
    for (std::size_t r = 0; r < rows; ++r)
      std::copy_n(src + r * widths[k], widths[k], out.begin() + r * total + offset);
    offset += widths[k];
  }
  Shape shape = first;
  shape.back() = total;
  return finish(std::move(shape), std::move(out), parts, "concat",
                [rows, total, widths](TensorImpl& o, Inputs in) {
                  std::size_t offset = 0;
                  for (std::size_t k = 0; k < widths.size(); ++k) {
                    if (double* dp = grad_of(in[k])) {
                      for (std::size_t r = 0; r < rows; ++r)
                        for (std::size_t i = 0; i < widths[k]; ++i)
                          dp[r * widths[k] + i] += o.grad[r * total + offset + i];
                    }
                    offset += widths[k];
                  }
                });
}

Tensor slice_last(const Tensor& t, std::size_t start, std::size_t length) {
  const std::size_t width = last_extent(t);
  if (length == 0 || start + length > width) {
    throw DimensionError("slice_last: [" + std::to_string(start) + ", " +
                         std::to_string(start + length) + ") out of range for " + shape_str(t.shape()));
  }
  const std::size_t rows = t.numel() / width;
  std::vector<double> out(rows * length);
  const double* src = t.data().data();
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(src + r * width + start, length, out.begin() + r * length);
  Shape shape = t.shape();
  shape.back() = length;
  return finish(std::move(shape), std::move(out), {t}, "slice_last",
                [rows, width, start, length](TensorImpl& o, Inputs in) {
                  double* g = grad_of(in[0]);
                  for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t i = 0; i < length; ++i) g[r * width + start + i] += o.grad[r * length + i];
                });
}

namespace {

// Shared row-softmax kernel; mask may be empty (all entries live).
Tensor softmax_rows(const Tensor& logits, double temperature, std::span<const std::uint8_t> mask,
                    const char* op) {
  const std::size_t n = last_extent(logits);
  const std::size_t rows = logits.numel() / n;
  const double* x = logits.data().data();
  std::vector<double> y(logits.numel(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * n;
    double* yr = y.data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      if (mask.empty() || mask[r * n + i]) mx = std::max(mx, xr[i] / temperature);
    if (!std::isfinite(mx)) continue;  // fully masked row stays zero
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!mask.empty() && !mask[r * n + i]) continue;
      yr[i] = std::exp(xr[i] / temperature - mx);
      total += yr[i];
    }
    for (std::size_t i = 0; i < n; ++i) yr[i] /= total;
  }
  auto saved = y;
  return finish(logits.shape(), std::move(y), {logits}, op,
                [rows, n, temperature, saved = std::move(saved)](TensorImpl& o, Inputs in) {
                  double* dx = grad_of(in[0]);
                  for (std::size_t r = 0; r < rows; ++r) {
                    const double* yr = saved.data() + r * n;
                    const double* gr = o.grad.data() + r * n;
                    const double inner = dot(gr, yr, n);
                    for (std::size_t i = 0; i < n; ++i)
                      dx[r * n + i] += yr[i] * (gr[i] - inner) / temperature;
                  }
                });
}

}  // namespace

Tensor softmax_with_temperature(const Tensor& logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw ParameterError("softmax temperature must be positive, got " + std::to_string(temperature));
  }
  return softmax_rows(logits, temperature, {}, "softmax");
}

Tensor masked_softmax(const Tensor& logits, std::span<const std::uint8_t> mask) {
  if (mask.size() != logits.numel()) {
    throw DimensionError("masked_softmax: mask size " + std::to_string(mask.size()) +
                         " does not match " + shape_str(logits.shape()));
  }
  return softmax_rows(logits, 1.0, mask, "masked_softmax");
}

Tensor sigmoid(const Tensor& t) {
  std::vector<double> y(t.numel());
  auto x = t.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double v = x[i];
    if (v >= 0) {
      y[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      y[i] = e / (1.0 + e);
    }
  }
  return finish(t.shape(), std::move(y), {t}, "sigmoid", [](TensorImpl& o, Inputs in) {
    double* dx = grad_of(in[0]);
    const auto& y = *o.data;
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += o.grad[i] * y[i] * (1.0 - y[i]);
  });
}

Tensor tanh(const Tensor& t) {
  std::vector<double> y(t.numel());
  auto x = t.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::tanh(x[i]);
  return finish(t.shape(), std::move(y), {t}, "tanh", [](TensorImpl& o, Inputs in) {
    double* dx = grad_of(in[0]);
    const auto& y = *o.data;
    for (std::size_t i = 0; i < y.size(); ++i) dx[i] += o.grad[i] * (1.0 - y[i] * y[i]);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
  return finish(a.shape(), std::move(y), {a, b}, "add", [](TensorImpl& o, Inputs in) {
    for (int k = 0; k < 2; ++k)
      if (double* d = grad_of(in[k]))
        for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] - b[i];
  return finish(a.shape(), std::move(y), {a, b}, "sub", [](TensorImpl& o, Inputs in) {
    if (double* d = grad_of(in[0]))
      for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i];
    if (double* d = grad_of(in[1]))
      for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] -= o.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> y(a.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
  return finish(a.shape(), std::move(y), {a, b}, "mul", [](TensorImpl& o, Inputs in) {
    const double* A = data_of(in[0]);
    const double* B = data_of(in[1]);
    if (double* d = grad_of(in[0]))
      for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i] * B[i];
    if (double* d = grad_of(in[1]))
      for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i] * A[i];
  });
}

Tensor pointwise(const Tensor& t, Pointwise fn) {
  switch (fn) {
    case Pointwise::Sigmoid:
      return sigmoid(t);
    case Pointwise::Tanh:
      return tanh(t);
    default:
      throw ParameterError("pointwise: binary function needs two operands");
  }
}

Tensor pointwise(const Tensor& a, const Tensor& b, Pointwise fn) {
  switch (fn) {
    case Pointwise::Add:
      return add(a, b);
    case Pointwise::Mul:
      return mul(a, b);
    default:
      throw ParameterError("pointwise: unary function takes one operand");
  }
}

Tensor scale(const Tensor& t, double factor) {
  std::vector<double> y(t.numel());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = t[i] * factor;
  return finish(t.shape(), std::move(y), {t}, "scale", [factor](TensorImpl& o, Inputs in) {
    double* d = grad_of(in[0]);
    for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i] * factor;
  });
}

Tensor sum(const Tensor& t) {
  double total = 0.0;
  for (double v : t.data()) total += v;
  return finish({1}, {total}, {t}, "sum", [](TensorImpl& o, Inputs in) {
    double* d = grad_of(in[0]);
    const double g = o.grad[0];
    for (std::size_t i = 0; i < in[0]->data->size(); ++i) d[i] += g;
  });
}

Tensor add_n(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("add_n: no tensors given");
  std::vector<double> y(parts[0].numel(), 0.0);
  for (const auto& p : parts) {
    require_same_shape(parts[0], p, "add_n");
    auto d = p.data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += d[i];
  }
  return finish(parts[0].shape(), std::move(y), parts, "add_n", [](TensorImpl& o, Inputs in) {
    for (const auto& p : in)
      if (double* d = grad_of(p))
        for (std::size_t i = 0; i < o.grad.size(); ++i) d[i] += o.grad[i];
  });
}

Tensor scale_rows(const Tensor& x, std::span<const double> weights) {
  if (x.rank() < 1 || x.dim(0) != weights.size()) {
    throw DimensionError("scale_rows: " + std::to_string(weights.size()) + " weights for " +
                         shape_str(x.shape()));
  }
  const std::size_t inner = x.numel() / weights.size();
  std::vector<double> w(weights.begin(), weights.end());
  std::vector<double> y(x.numel());
  for (std::size_t r = 0; r < w.size(); ++r)
    for (std::size_t i = 0; i < inner; ++i) y[r * inner + i] = x[r * inner + i] * w[r];
  return finish(x.shape(), std::move(y), {x}, "scale_rows",
                [inner, w = std::move(w)](TensorImpl& o, Inputs in) {
                  double* d = grad_of(in[0]);
                  for (std::size_t r = 0; r < w.size(); ++r)
                    for (std::size_t i = 0; i < inner; ++i) d[r * inner + i] += o.grad[r * inner + i] * w[r];
                });
}

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  if (table.rank() != 2) throw DimensionError("embedding: table must be a matrix");
  if (ids.empty()) throw DimensionError("embedding: no ids given");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<int> rows(ids.begin(), ids.end());
  const std::size_t n = rows.size();
  std::vector<double> y(rows.size() * d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || static_cast<std::size_t>(rows[r]) >= vocab) {
      throw VocabError("id " + std::to_string(rows[r]) + " outside vocabulary of size " +
                       std::to_string(vocab));
    }
    std::copy_n(table.data().begin() + rows[r] * d, d, y.begin() + r * d);
  }
  return finish({n, d}, std::move(y), {table}, "embedding",
                [d, rows = std::move(rows)](TensorImpl& o, Inputs in) {
                  double* dt = grad_of(in[0]);
                  for (std::size_t r = 0; r < rows.size(); ++r)
                    for (std::size_t i = 0; i < d; ++i) dt[rows[r] * d + i] += o.grad[r * d + i];
                });
}

Tensor cross_entropy(const Tensor& logits, std::size_t true_index) {
  if (logits.rank() != 1) throw DimensionError("cross_entropy: logits must be a vector");
  if (true_index >= logits.dim(0)) {
    throw ParameterError("cross_entropy: index " + std::to_string(true_index) +
                         " out of range for " + std::to_string(logits.dim(0)) + " classes");
  }
  const int target = static_cast<int>(true_index);
  const double weight = 1.0;
  return cross_entropy_rows(reshape(logits, {1, logits.dim(0)}), {&target, 1}, {&weight, 1});
}

Tensor cross_entropy_rows(const Tensor& logits, std::span<const int> targets,
                          std::span<const double> weights) {
  if (logits.rank() != 2 || targets.size() != logits.dim(0) || weights.size() != logits.dim(0)) {
    throw DimensionError("cross_entropy_rows: logits " + shape_str(logits.shape()) + " with " +
                         std::to_string(targets.size()) + " targets");
  }
  const std::size_t rows = logits.dim(0), n = logits.dim(1);
  const double* x = logits.data().data();
  std::vector<double> probs(rows * n);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] < 0 || static_cast<std::size_t>(targets[r]) >= n) {
      throw ParameterError("cross_entropy: index " + std::to_string(targets[r]) +
                           " out of range for " + std::to_string(n) + " classes");
    }
    const double* xr = x + r * n;
    const double mx = *std::max_element(xr, xr + n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      probs[r * n + i] = std::exp(xr[i] - mx);
      total += probs[r * n + i];
    }
    for (std::size_t i = 0; i < n; ++i) probs[r * n + i] /= total;
    if (weights[r] != 0.0) loss += weights[r] * (mx + std::log(total) - xr[targets[r]]);
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  std::vector<double> w(weights.begin(), weights.end());
  return finish({1}, {loss}, {logits}, "cross_entropy",
                [rows, n, probs = std::move(probs), tgt = std::move(tgt), w = std::move(w)](
                    TensorImpl& o, Inputs in) {
                  double* dx = grad_of(in[0]);
                  const double g = o.grad[0];
                  for (std::size_t r = 0; r < rows; ++r) {
                    if (w[r] == 0.0) continue;
                    const double scale = g * w[r];
                    for (std::size_t i = 0; i < n; ++i) dx[r * n + i] += scale * probs[r * n + i];
                    dx[r * n + tgt[r]] -= scale;
                  }
                });
}

}  // namespace tpn2f
