#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltbn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Graph recording switch. Off means ops produce plain tensors with no
// backward rules attached, so nothing is retained for backward.
class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads self.grad and accumulates into parents that require grad.
  std::function<void(Node&)> backward_fn;

  std::vector<T>& ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// Dense row-major tensor with reverse-mode autodiff.
///
/// Copies share the underlying storage (handle semantics). `T` is `float`
/// for training and inference; `double` exists for gradient verification.
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node().shape; }
  std::size_t rank() const { return node().shape.size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t numel() const { return node().data.size(); }

  std::span<const T> data() const { return node().data; }
  // Only optimizers and loaders write through this.
  std::span<T> mutable_data() { return node().data; }
  T item() const;
  T at(std::initializer_list<std::size_t> index) const;

  bool requires_grad() const { return node().requires_grad; }
  Tensor& set_requires_grad(bool on);
  bool is_leaf() const { return !node().backward_fn; }
  const char* op_name() const { return node().op; }

  bool has_grad() const { return !node().grad.empty(); }
  std::span<const T> grad() const { return node().grad; }
  std::span<T> mutable_grad() { return node().ensure_grad(); }
  void zero_grad();

  /// Reverse pass from a rank-0 tensor. Gradients are summed into every
  /// requires-grad ancestor; callers zero them between steps. The recorded
  /// graph is released afterwards.
  void backward() const;

  /// Copy of the values with no graph history.
  Tensor detach() const;

  const NodePtr& node_ptr() const { return node_; }

 private:
  detail::Node<T>& node() const;
  NodePtr node_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

/// Builds an op result. When recording and any input requires grad, the
/// result is attached to the graph with `backward`.
template <typename T>
Tensor<T> make_op_result(Shape shape, std::vector<T> data,
                         std::vector<Tensor<T>> inputs, const char* op,
                         std::function<void(detail::Node<T>&)> backward);

// Elementwise; shapes must match unless one side is rank-0.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> square(const Tensor<T>& a);
template <typename T> Tensor<T> exp(const Tensor<T>& a);
template <typename T> Tensor<T> log(const Tensor<T>& a);

template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> mean(const Tensor<T>& a);

/// [M,K] x [K,P] -> [M,P]
template <typename T> Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> reshape(const Tensor<T>& a, Shape shape);
/// Picks element [i, index[i]] of a rank-2 tensor, giving shape [rows].
template <typename T>
Tensor<T> pick_columns(const Tensor<T>& a, std::span<const int> index);

template <typename T> Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T> Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }

}  // namespace ltbn
