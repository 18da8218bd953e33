#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tpn2f/tensor.hpp"

// Differentiable tensor operations. Each op records a tape node when a tape is
// active and at least one input requires grad; otherwise it is a plain
// forward computation.

namespace tpn2f {

Tensor reshape(const Tensor& t, Shape shape);
Tensor flatten(const Tensor& t);

/// a[m x k] . b[k x n] -> [m x n], or a[m x k] . b[k] -> [m].
Tensor matmul(const Tensor& a, const Tensor& b);

/// x[..., in] -> x W^T + bias, shape [..., out]; weight is [out x in].
/// `bias` may be an undefined Tensor.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias = Tensor());

/// a[m] (x) b[n] -> [m x n].
Tensor outer_product(const Tensor& a, const Tensor& b);

/// Row-wise outer product: a[B x m], b[B x n] -> [B x m x n].
Tensor batched_outer(const Tensor& a, const Tensor& b);

/// Tensor inner product over the last axis: t[d1..dn] . v[dn] -> [d1..dn-1].
Tensor contract_last(const Tensor& t, const Tensor& v);

/// Per-row contraction: t[B x d1.. x n] with v[B x n] -> [B x d1..].
Tensor batched_contract_last(const Tensor& t, const Tensor& v);

/// weights[B x L], values[B x L x D] -> [B x D] with out[b] = sum_l w[b,l] values[b,l].
Tensor weighted_sum(const Tensor& weights, const Tensor& values);

/// Stacks equally shaped tensors along a new axis 1 ([B x D] -> [B x L x D]),
/// or along axis 0 for order-1 parts ([D] -> [L x D]).
Tensor stack(std::span<const Tensor> parts);

/// Concatenation along the last axis.
Tensor concat(std::span<const Tensor> parts);

/// Columns [start, start + length) of the last axis.
Tensor slice_last(const Tensor& t, std::size_t start, std::size_t length);

/// softmax(logits / temperature) over the last axis, max-subtracted.
Tensor softmax_with_temperature(const Tensor& logits, double temperature);

/// Softmax over the last axis where entries with mask == 0 get probability 0.
/// `mask` has one entry per logit.
Tensor masked_softmax(const Tensor& logits, std::span<const std::uint8_t> mask);

enum class Pointwise { Sigmoid, Tanh, Add, Mul };

Tensor pointwise(const Tensor& t, Pointwise fn);
Tensor pointwise(const Tensor& a, const Tensor& b, Pointwise fn);

Tensor sigmoid(const Tensor& t);
Tensor tanh(const Tensor& t);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double factor);
Tensor sum(const Tensor& t);
Tensor add_n(std::span<const Tensor> parts);

/// x[B x ...] with row b multiplied by the constant weights[b].
Tensor scale_rows(const Tensor& x, std::span<const double> weights);

/// Gathers rows of table[V x D] -> [ids.size() x D].
Tensor embedding(const Tensor& table, std::span<const int> ids);

/// -log softmax(logits)[true_index] for order-1 logits, as a [1] tensor.
Tensor cross_entropy(const Tensor& logits, std::size_t true_index);

/// sum_b weights[b] * CE(logits[b], targets[b]) for logits[B x n].
Tensor cross_entropy_rows(const Tensor& logits, std::span<const int> targets,
                          std::span<const double> weights);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }

}  // namespace tpn2f
