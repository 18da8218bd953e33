#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tpn2f/tensor.hpp"

// Tensor Product Representation algebra: order-2 filler/role binding, order-3
// relational-tuple binding, dual (unbinding) bases, and the residual
// decomposition of a tensor that satisfies a set of unbinding conditions.
//
// Binding and unbinding are built from differentiable ops, so they can sit
// inside a model forward pass. Dual-basis construction is not differentiable.

namespace tpn2f::tpr {

/// Filler/role dictionaries plus the unbinding matrix U (left inverse or
/// pseudo-inverse of R).
struct TprSpace {
  std::size_t filler_dim = 0;
  std::size_t filler_count = 0;
  std::size_t role_dim = 0;
  std::size_t role_count = 0;
  Tensor fillers;    // d_F x n_F, column i is filler i
  Tensor roles;      // d_R x n_R, column i is role i
  Tensor unbinding;  // n_R x d_R

  static TprSpace from_dictionaries(Tensor fillers, Tensor roles);

  Tensor filler(std::size_t i) const;
  Tensor role(std::size_t i) const;
  /// u_j, the j-th column of U^T.
  Tensor unbinding_vector(std::size_t j) const;
};

/// Positional sub-roles for order-3 tuple TPRs and their unbinding duals.
struct TupleTprConfig {
  std::size_t arg_dim = 0;
  std::size_t rel_dim = 0;
  std::size_t pos_dim = 0;
  Tensor positions;          // d_Pos x k, column i is p_i
  std::vector<Tensor> duals;  // p'_i, each of length d_Pos

  /// Derives p'_i as the dual basis of the given position columns.
  static TupleTprConfig with_dual_positions(std::size_t arg_dim, std::size_t rel_dim,
                                            Tensor positions);
  Tensor position(std::size_t i) const;
};

/// T = sum_i f_i r_i^T.
Tensor bind2(std::span<const Tensor> fillers, std::span<const Tensor> roles);
/// Same, with declared extents so that empty lists give a zero tensor.
Tensor bind2(std::span<const Tensor> fillers, std::span<const Tensor> roles,
             std::size_t filler_dim, std::size_t role_dim);

/// T . u.
Tensor unbind2(const Tensor& tpr, const Tensor& unbinding_vector);

/// Left inverse of R when its columns are independent, otherwise the
/// Moore-Penrose pseudo-inverse via ridge-regularised normal equations.
Tensor dual_basis(const Tensor& roles);

/// H = a1 (x) r (x) p1 + a2 (x) r (x) p2, shape d_Arg x d_Rel x d_Pos.
Tensor bind3(const Tensor& arg1, const Tensor& arg2, const Tensor& relation,
             const TupleTprConfig& cfg);

/// (H . p'_i) . r'.
Tensor unbind3(const Tensor& tuple_tpr, const Tensor& position_unbinding,
               const Tensor& relation_unbinding);

struct Decomposition {
  Tensor tpr;       // sum_i f_i r_i^T over the given unbinding vectors
  Tensor residual;  // H - tpr; annihilates every given unbinding vector
  std::vector<Tensor> basis;  // unbinding vectors completed to a basis
  std::vector<Tensor> roles;  // dual of `basis`, same order
};

/// Splits H into the TPR implied by H . u_i = f_i and a residual that maps
/// every u_i to zero. Throws ConsistencyError if some H . u_i differs from f_i
/// by more than `tolerance`, or if the u_i are linearly dependent.
Decomposition decompose_residual(const Tensor& h, std::span<const Tensor> unbinding_vectors,
                                 std::span<const Tensor> fillers, double tolerance = 1e-8);

inline constexpr double kDualRidge = 1e-10;

}  // namespace tpn2f::tpr
