#include "tpn2f/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tpn2f/error.hpp"

namespace tpn2f::linalg {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) throw DimensionError("matrix value count does not match its shape");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols, rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::vector<double> Matrix::column(std::size_t c) const {
  std::vector<double> out(rows);
  for (std::size_t r = 0; r < rows; ++r) out[r] = (*this)(r, c);
  return out;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) throw DimensionError("matrix product: inner extents differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t p = 0; p < a.cols; ++p) {
      const double aip = a(i, p);
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aip * b(p, j);
    }
  return out;
}

std::vector<double> multiply(const Matrix& a, const std::vector<double>& x) {
  if (a.cols != x.size()) throw DimensionError("matrix-vector product: extents differ");
  std::vector<double> out(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out[i] += a(i, j) * x[j];
  return out;
}

std::optional<Matrix> cholesky(const Matrix& spd, double min_pivot) {
  const std::size_t n = spd.rows;
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(spd(i, i)));
  const double floor = min_pivot * std::max(max_diag, 1e-300);
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = spd(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > floor)) return std::nullopt;
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = spd(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Matrix cholesky_solve(const Matrix& lower, const Matrix& rhs) {
  const std::size_t n = lower.rows;
  Matrix x = rhs;
  for (std::size_t c = 0; c < rhs.cols; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, c);
      for (std::size_t k = 0; k < i; ++k) s -= lower(i, k) * x(k, c);
      x(i, c) = s / lower(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, c);
      for (std::size_t k = i + 1; k < n; ++k) s -= lower(k, i) * x(k, c);
      x(i, c) = s / lower(i, i);
    }
  }
  return x;
}

std::optional<Matrix> inverse(const Matrix& a) {
  if (a.rows != a.cols) throw DimensionError("inverse of a non-square matrix");
  const std::size_t n = a.rows;
  Matrix work = a;
  Matrix inv = Matrix::identity(n);
  double scale = 0.0;
  for (double v : a.data) scale = std::max(scale, std::abs(v));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(work(r, col)) > std::abs(work(pivot, col))) pivot = r;
    if (std::abs(work(pivot, col)) <= 1e-14 * std::max(scale, 1e-300)) return std::nullopt;
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(work(pivot, c), work(col, c));
        std::swap(inv(pivot, c), inv(col, c));
      }
    }
    const double p = work(col, col);
    for (std::size_t c = 0; c < n; ++c) {
      work(col, c) /= p;
      inv(col, c) /= p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = work(r, col);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < n; ++c) {
        work(r, c) -= f * work(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }
  return inv;
}

EigenDecomposition symmetric_eigen(const Matrix& sym, double tolerance, int max_sweeps) {
  if (sym.rows != sym.cols) throw DimensionError("eigen-decomposition of a non-square matrix");
  const std::size_t n = sym.rows;
  Matrix a = sym;
  Matrix v = Matrix::identity(n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        total += a(i, j) * a(i, j);
        if (i != j) off += a(i, j) * a(i, j);
      }
    if (off <= tolerance * tolerance * std::max(total, 1e-300)) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });
  EigenDecomposition out;
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values.push_back(a(order[k], order[k]));
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("dot product of vectors with different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

}  // namespace tpn2f::linalg
