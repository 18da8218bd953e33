#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tpn2f {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class GradientTape;

namespace detail {

struct TensorImpl {
  Shape shape;
  // Shared so that reshape can alias the buffer without copying.
  std::shared_ptr<std::vector<double>> data;
  std::vector<double> grad;
  bool has_grad = false;
  bool requires_grad = false;
  const GradientTape* tape = nullptr;
  std::size_t tape_index = 0;

  std::vector<double>& grad_buffer();
};

using ImplPtr = std::shared_ptr<TensorImpl>;

}  // namespace detail

/// Dense row-major tensor of doubles. Copies are shallow: two Tensor values
/// may refer to the same node, the way parameter handles are passed around.
class Tensor {
 public:
  Tensor();

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  std::vector<double> to_vector() const;
  double item() const;
  double operator[](std::size_t flat_index) const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();
  void clear_grad();

  /// Handle of the tape node that produced this tensor, if any.
  std::optional<std::size_t> tape_id() const;

  /// Same values, no tape history, no grad requirement.
  Tensor detach() const;
  /// Deep copy of the values.
  Tensor clone() const;

  const detail::ImplPtr& impl() const { return impl_; }
  explicit Tensor(detail::ImplPtr impl) : impl_(std::move(impl)) {}

 private:
  detail::ImplPtr impl_;
};

/// Append-only record of differentiable operations. Constructing a tape makes
/// it the active tape of the calling thread until it is destroyed; tapes nest.
class GradientTape {
 public:
  using BackwardFn =
      std::function<void(detail::TensorImpl& out, std::span<const detail::ImplPtr> inputs)>;

  GradientTape();
  ~GradientTape();
  GradientTape(const GradientTape&) = delete;
  GradientTape& operator=(const GradientTape&) = delete;

  static GradientTape* active();

  std::size_t size() const { return nodes_.size(); }
  std::string_view op_name(std::size_t index) const { return nodes_.at(index).op; }

  void record(const char* op, std::vector<detail::ImplPtr> inputs, const detail::ImplPtr& output,
              BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse.
  void backward(const Tensor& loss);

 private:
  struct Node {
    const char* op;
    std::vector<detail::ImplPtr> inputs;
    detail::ImplPtr output;
    BackwardFn fn;
  };
  std::vector<Node> nodes_;
  GradientTape* previous_;
};

/// Backward pass on the tape that recorded `loss`, which must be the active one.
void backward(const Tensor& loss);

}  // namespace tpn2f
