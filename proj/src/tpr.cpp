#include "tpn2f/tpr.hpp"

#include <cmath>

#include "tpn2f/error.hpp"
#include "tpn2f/linalg.hpp"
#include "tpn2f/ops.hpp"
#include "tpn2f/random.hpp"

namespace tpn2f::tpr {

namespace {

linalg::Matrix to_matrix(const Tensor& t) {
  if (t.rank() != 2) throw DimensionError("expected a matrix, got " + shape_str(t.shape()));
  return linalg::Matrix(t.dim(0), t.dim(1), t.to_vector());
}

Tensor to_tensor(const linalg::Matrix& m) { return Tensor::matrix(m.rows, m.cols, m.data); }

Tensor column_of(const Tensor& m, std::size_t c) {
  if (c >= m.dim(1)) {
    throw DimensionError("column " + std::to_string(c) + " out of range for " + shape_str(m.shape()));
  }
  std::vector<double> out(m.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = m[r * m.dim(1) + c];
  return Tensor::vector(std::move(out));
}

void require_vector(const Tensor& v, std::size_t dim, const char* what) {
  if (v.rank() != 1 || v.dim(0) != dim) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(dim) + ", got " +
                         shape_str(v.shape()));
  }
}

}  // namespace

TprSpace TprSpace::from_dictionaries(Tensor fillers, Tensor roles) {
  if (fillers.rank() != 2 || roles.rank() != 2) {
    throw DimensionError("TPR dictionaries must be matrices");
  }
  TprSpace space;
  space.filler_dim = fillers.dim(0);
  space.filler_count = fillers.dim(1);
  space.role_dim = roles.dim(0);
  space.role_count = roles.dim(1);
  space.unbinding = dual_basis(roles);
  space.fillers = std::move(fillers);
  space.roles = std::move(roles);
  return space;
}

Tensor TprSpace::filler(std::size_t i) const { return column_of(fillers, i); }
Tensor TprSpace::role(std::size_t i) const { return column_of(roles, i); }

Tensor TprSpace::unbinding_vector(std::size_t j) const {
  if (j >= role_count) throw DimensionError("unbinding vector index out of range");
  auto row = unbinding.data().subspan(j * role_dim, role_dim);
  return Tensor::vector({row.begin(), row.end()});
}

TupleTprConfig TupleTprConfig::with_dual_positions(std::size_t arg_dim, std::size_t rel_dim,
                                                   Tensor positions) {
  TupleTprConfig cfg;
  cfg.arg_dim = arg_dim;
  cfg.rel_dim = rel_dim;
  cfg.pos_dim = positions.dim(0);
  const Tensor u = dual_basis(positions);
  for (std::size_t i = 0; i < positions.dim(1); ++i) {
    auto row = u.data().subspan(i * cfg.pos_dim, cfg.pos_dim);
    cfg.duals.push_back(Tensor::vector({row.begin(), row.end()}));
  }
  cfg.positions = std::move(positions);
  return cfg;
}

Tensor TupleTprConfig::position(std::size_t i) const { return column_of(positions, i); }

Tensor bind2(std::span<const Tensor> fillers, std::span<const Tensor> roles) {
  if (fillers.empty() || roles.empty()) {
    throw DimensionError("bind2: empty lists need declared dimensions");
  }
  return bind2(fillers, roles, fillers[0].numel(), roles[0].numel());
}

Tensor bind2(std::span<const Tensor> fillers, std::span<const Tensor> roles,
             std::size_t filler_dim, std::size_t role_dim) {
  if (fillers.size() != roles.size()) {
    throw DimensionError("bind2: " + std::to_string(fillers.size()) + " fillers but " +
                         std::to_string(roles.size()) + " roles");
  }
  if (fillers.empty()) return Tensor::zeros({filler_dim, role_dim});
  std::vector<Tensor> terms;
  terms.reserve(fillers.size());
  for (std::size_t i = 0; i < fillers.size(); ++i) {
    require_vector(fillers[i], filler_dim, "bind2 filler");
    require_vector(roles[i], role_dim, "bind2 role");
    terms.push_back(outer_product(fillers[i], roles[i]));
  }
  return terms.size() == 1 ? terms[0] : add_n(terms);
}

Tensor unbind2(const Tensor& tpr, const Tensor& unbinding_vector) {
  if (tpr.rank() != 2) throw DimensionError("unbind2: TPR must be order 2, got " + shape_str(tpr.shape()));
  return contract_last(tpr, unbinding_vector);
}

Tensor dual_basis(const Tensor& roles) {
  const linalg::Matrix r = to_matrix(roles);
  const std::size_t d = r.rows, n = r.cols;
  const linalg::Matrix rt = r.transpose();
  auto ridge = [](linalg::Matrix g) {
    for (std::size_t i = 0; i < g.rows; ++i) g(i, i) += kDualRidge;
    return g;
  };
  if (n <= d) {
    // U = (R^T R)^{-1} R^T: exact left inverse for independent columns.
    linalg::Matrix gram = linalg::multiply(rt, r);
    auto chol = linalg::cholesky(gram);
    if (!chol) chol = linalg::cholesky(ridge(gram), 0.0);
    if (!chol) throw ConsistencyError("dual_basis: role Gram matrix is not positive definite");
    return to_tensor(linalg::cholesky_solve(*chol, rt));
  }
  // Overcomplete: U = R^T (R R^T)^{-1}, the pseudo-inverse for full row rank.
  linalg::Matrix gram = linalg::multiply(r, rt);
  auto chol = linalg::cholesky(gram);
  if (!chol) chol = linalg::cholesky(ridge(gram), 0.0);
  if (!chol) throw ConsistencyError("dual_basis: role Gram matrix is not positive definite");
  // (R R^T)^{-1} R = solve, then transpose gives R^T (R R^T)^{-1}.
  return to_tensor(linalg::cholesky_solve(*chol, r).transpose());
}

Tensor bind3(const Tensor& arg1, const Tensor& arg2, const Tensor& relation,
             const TupleTprConfig& cfg) {
  require_vector(arg1, cfg.arg_dim, "bind3 arg1");
  require_vector(arg2, cfg.arg_dim, "bind3 arg2");
  require_vector(relation, cfg.rel_dim, "bind3 relation");
  if (cfg.positions.rank() != 2 || cfg.positions.dim(0) != cfg.pos_dim || cfg.positions.dim(1) < 2) {
    throw DimensionError("bind3: position matrix must be d_Pos x 2");
  }
  const std::size_t ar = cfg.arg_dim * cfg.rel_dim;
  auto term = [&](const Tensor& arg, std::size_t i) {
    Tensor arg_rel = reshape(outer_product(arg, relation), {ar});
    return outer_product(arg_rel, cfg.position(i));
  };
  return reshape(add(term(arg1, 0), term(arg2, 1)), {cfg.arg_dim, cfg.rel_dim, cfg.pos_dim});
}

Tensor unbind3(const Tensor& tuple_tpr, const Tensor& position_unbinding,
               const Tensor& relation_unbinding) {
  if (tuple_tpr.rank() != 3) {
    throw DimensionError("unbind3: TPR must be order 3, got " + shape_str(tuple_tpr.shape()));
  }
  return contract_last(contract_last(tuple_tpr, position_unbinding), relation_unbinding);
}

Decomposition decompose_residual(const Tensor& h, std::span<const Tensor> unbinding_vectors,
                                 std::span<const Tensor> fillers, double tolerance) {
  if (h.rank() != 2) throw DimensionError("decompose_residual: H must be order 2");
  const std::size_t d_f = h.dim(0), d_r = h.dim(1);
  const std::size_t k = unbinding_vectors.size();
  if (fillers.size() != k) throw DimensionError("decompose_residual: one filler per unbinding vector");
  if (k > d_r) throw ConsistencyError("decompose_residual: more unbinding vectors than dimensions");

  for (std::size_t i = 0; i < k; ++i) {
    require_vector(unbinding_vectors[i], d_r, "unbinding vector");
    require_vector(fillers[i], d_f, "filler");
    const Tensor got = unbind2(h, unbinding_vectors[i]);
    double err = 0.0;
    for (std::size_t j = 0; j < d_f; ++j) err += std::pow(got[j] - fillers[i][j], 2);
    if (std::sqrt(err) > tolerance) {
      throw ConsistencyError("decompose_residual: H . u_" + std::to_string(i) + " misses f_" +
                             std::to_string(i) + " by " + std::to_string(std::sqrt(err)));
    }
  }

  // Gram-Schmidt over the given vectors, then over random candidates until
  // the set spans the role space.
  std::vector<std::vector<double>> basis;
  std::vector<std::vector<double>> ortho;
  auto orthogonal_part = [&](std::vector<double> v) {
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : ortho) {
        const double c = linalg::dot(v, q);
        for (std::size_t j = 0; j < d_r; ++j) v[j] -= c * q[j];
      }
    return v;
  };
  auto accept = [&](const std::vector<double>& v, double min_ratio) {
    std::vector<double> o = orthogonal_part(v);
    const double n = linalg::norm(o);
    if (n <= min_ratio * linalg::norm(v)) return false;
    for (auto& x : o) x /= n;
    ortho.push_back(std::move(o));
    basis.push_back(v);
    return true;
  };
  for (std::size_t i = 0; i < k; ++i) {
    if (!accept(unbinding_vectors[i].to_vector(), 1e-10)) {
      throw ConsistencyError("decompose_residual: unbinding vectors are linearly dependent");
    }
  }
  Rng rng(0x5eedULL);
  while (basis.size() < d_r) {
    std::vector<double> candidate = orthogonal_part(rng.normal_vector(d_r));
    accept(candidate, 1e-6);
  }

  linalg::Matrix columns(d_r, d_r);
  for (std::size_t c = 0; c < d_r; ++c)
    for (std::size_t r = 0; r < d_r; ++r) columns(r, c) = basis[c][r];
  auto inv = linalg::inverse(columns);
  if (!inv) throw ConsistencyError("decompose_residual: completed basis is singular");

  Decomposition out;
  for (std::size_t c = 0; c < d_r; ++c) {
    out.basis.push_back(Tensor::vector(basis[c]));
    std::vector<double> role(d_r);
    for (std::size_t j = 0; j < d_r; ++j) role[j] = (*inv)(c, j);
    out.roles.push_back(Tensor::vector(std::move(role)));
  }
  out.tpr = bind2(fillers, std::span<const Tensor>(out.roles).first(k), d_f, d_r);
  out.residual = sub(h, out.tpr);
  return out;
}

}  // namespace tpn2f::tpr
