#include "tpn2f/tensor.hpp"

#include <algorithm>
#include <numeric>

#include "tpn2f/error.hpp"

namespace tpn2f {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

namespace detail {

std::vector<double>& TensorImpl::grad_buffer() {
  if (!has_grad) {
    grad.assign(data->size(), 0.0);
    has_grad = true;
  }
  return grad;
}

}  // namespace detail

namespace {

detail::ImplPtr make_impl(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto extent : shape) {
    if (extent == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("shape " + shape_str(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::make_shared<std::vector<double>>(std::move(values));
  impl->requires_grad = requires_grad;
  return impl;
}

thread_local GradientTape* g_active_tape = nullptr;

}  // namespace

Tensor::Tensor() = default;

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(make_impl(std::move(shape), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(make_impl(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  return Tensor(make_impl(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  Shape shape{values.size()};
  return from(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return from({rows, cols}, std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

namespace {
const detail::TensorImpl& checked(const detail::ImplPtr& impl) {
  if (!impl) throw StateError("use of an undefined tensor");
  return *impl;
}
}  // namespace

const Shape& Tensor::shape() const { return checked(impl_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return checked(impl_).data->size(); }

std::span<const double> Tensor::data() const { return *checked(impl_).data; }

std::span<double> Tensor::mutable_data() {
  checked(impl_);
  return *impl_->data;
}

std::vector<double> Tensor::to_vector() const {
  auto d = data();
  return {d.begin(), d.end()};
}

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on non-scalar " + shape_str(shape()));
  return data()[0];
}

double Tensor::operator[](std::size_t flat_index) const { return data()[flat_index]; }

bool Tensor::requires_grad() const { return checked(impl_).requires_grad; }

void Tensor::set_requires_grad(bool value) {
  checked(impl_);
  impl_->requires_grad = value;
}

bool Tensor::has_grad() const { return checked(impl_).has_grad; }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) throw StateError("tensor " + shape_str(shape()) + " has no gradient");
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  checked(impl_);
  return impl_->grad_buffer();
}

void Tensor::zero_grad() {
  checked(impl_);
  if (impl_->has_grad) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

void Tensor::clear_grad() {
  checked(impl_);
  impl_->grad.clear();
  impl_->grad.shrink_to_fit();
  impl_->has_grad = false;
}

std::optional<std::size_t> Tensor::tape_id() const {
  if (checked(impl_).tape == nullptr) return std::nullopt;
  return impl_->tape_index;
}

Tensor Tensor::detach() const {
  auto impl = std::make_shared<detail::TensorImpl>();
  impl->shape = shape();
  impl->data = impl_->data;
  return Tensor(std::move(impl));
}

Tensor Tensor::clone() const { return from(shape(), to_vector(), requires_grad()); }

GradientTape::GradientTape() : previous_(g_active_tape) { g_active_tape = this; }

GradientTape::~GradientTape() { g_active_tape = previous_; }

GradientTape* GradientTape::active() { return g_active_tape; }

void GradientTape::record(const char* op, std::vector<detail::ImplPtr> inputs,
                          const detail::ImplPtr& output, BackwardFn fn) {
  output->tape = this;
  output->tape_index = nodes_.size();
  output->requires_grad = true;
  nodes_.push_back(Node{op, std::move(inputs), output, std::move(fn)});
}

void GradientTape::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw StateError("backward() needs a scalar loss, got " + shape_str(loss.shape()));
  }
  const auto& impl = loss.impl();
  if (impl->tape != this) throw StateError("loss was not recorded on this gradient tape");
  impl->grad_buffer()[0] += 1.0;
  for (std::size_t i = impl->tape_index + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.output->has_grad) continue;
    for (const auto& in : node.inputs) {
      if (in->requires_grad) in->grad_buffer();
    }
    node.fn(*node.output, node.inputs);
  }
}

void backward(const Tensor& loss) {
  auto* tape = GradientTape::active();
  if (tape == nullptr) throw StateError("backward() called with no active gradient tape");
  tape->backward(loss);
}

}  // namespace tpn2f
