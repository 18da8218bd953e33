#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace tpn2f::linalg {

/// Small dense row-major matrix for the non-differentiable numerics
/// (dual bases, basis completion, PCA).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values);

  static Matrix identity(std::size_t n);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  Matrix transpose() const;
  std::vector<double> column(std::size_t c) const;
};

Matrix multiply(const Matrix& a, const Matrix& b);
std::vector<double> multiply(const Matrix& a, const std::vector<double>& x);

/// Cholesky factor L (lower) of a symmetric matrix, or nullopt when a pivot
/// falls below `min_pivot` times the largest diagonal entry.
std::optional<Matrix> cholesky(const Matrix& spd, double min_pivot = 1e-13);

/// Solves (L L^T) X = B for X given the Cholesky factor.
Matrix cholesky_solve(const Matrix& lower, const Matrix& rhs);

/// Inverse by Gauss-Jordan elimination with partial pivoting; nullopt if singular.
std::optional<Matrix> inverse(const Matrix& a);

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column k pairs with values[k]
};

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
EigenDecomposition symmetric_eigen(const Matrix& sym, double tolerance = 1e-14,
                                   int max_sweeps = 100);

double norm(const std::vector<double>& v);
double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace tpn2f::linalg
