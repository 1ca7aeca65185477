#include "lighttbnet/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "lighttbnet/gemm.hpp"

namespace ltbn {

namespace {
thread_local bool grad_mode_enabled = true;
}

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

bool GradMode::enabled() { return grad_mode_enabled; }
void GradMode::set_enabled(bool on) { grad_mode_enabled = on; }

NoGradGuard::NoGradGuard() : prev_(GradMode::enabled()) { GradMode::set_enabled(false); }
NoGradGuard::~NoGradGuard() { GradMode::set_enabled(prev_); }

// ---------------------------------------------------------------------------
// Tensor

template <typename T>
detail::Node<T>& Tensor<T>::node() const {
  if (!node_) throw std::logic_error("use of undefined tensor");
  return *node_;
}

template <typename T>
Tensor<T> Tensor<T>::from(Shape shape, std::vector<T> data, bool requires_grad) {
  for (auto d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_str(shape));
  }
  if (ltbn::numel(shape) != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto n = std::make_shared<detail::Node<T>>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const auto n = ltbn::numel(shape);
  return from(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

template <typename T>
std::size_t Tensor<T>::dim(std::size_t i) const {
  const auto& s = node().shape;
  if (i >= s.size()) throw ShapeError("dim " + std::to_string(i) + " out of range for " + shape_str(s));
  return s[i];
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node().data[0];
}

template <typename T>
T Tensor<T>::at(std::initializer_list<std::size_t> index) const {
  const auto& s = node().shape;
  if (index.size() != s.size()) throw ShapeError("index rank mismatch for " + shape_str(s));
  std::size_t flat = 0;
  std::size_t i = 0;
  for (auto v : index) {
    if (v >= s[i]) throw std::out_of_range("index out of range for " + shape_str(s));
    flat = flat * s[i] + v;
    ++i;
  }
  return node().data[flat];
}

template <typename T>
Tensor<T>& Tensor<T>::set_requires_grad(bool on) {
  node().requires_grad = on;
  return *this;
}

template <typename T>
void Tensor<T>::zero_grad() {
  auto& n = node();
  std::fill(n.grad.begin(), n.grad.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from(shape(), node().data, false);
}

template <typename T>
void Tensor<T>::backward() const {
  auto& root = node();
  if (!root.shape.empty()) {
    throw ShapeError("backward() needs a rank-0 loss, got shape " + shape_str(root.shape));
  }
  if (!root.requires_grad) return;

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<detail::Node<T>*> order;
  std::unordered_set<detail::Node<T>*> seen;
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack;
  stack.emplace_back(&root, 0);
  seen.insert(&root);
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      auto* p = n->parents[next++].get();
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  root.ensure_grad()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
  for (auto* n : order) {
    n->backward_fn = nullptr;
    n->parents.clear();
  }
}

template class Tensor<float>;
template class Tensor<double>;

// ---------------------------------------------------------------------------
// Op plumbing

template <typename T>
Tensor<T> make_op_result(Shape shape, std::vector<T> data, std::vector<Tensor<T>> inputs,
                         const char* op, std::function<void(detail::Node<T>&)> backward) {
  auto out = Tensor<T>::from(std::move(shape), std::move(data), false);
  if (!GradMode::enabled()) return out;
  bool any = false;
  for (const auto& in : inputs) any = any || in.requires_grad();
  if (!any) return out;
  auto& n = *out.node_ptr();
  n.requires_grad = true;
  n.op = op;
  n.parents.reserve(inputs.size());
  for (const auto& in : inputs) n.parents.push_back(in.node_ptr());
  n.backward_fn = std::move(backward);
  return out;
}

namespace {

template <typename T>
void accumulate(detail::Node<T>& target, const std::vector<T>& g) {
  if (!target.requires_grad) return;
  auto& dst = target.ensure_grad();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

enum class Broadcast { None, LeftScalar, RightScalar };

template <typename T>
Broadcast check_binary(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::None;
  if (a.rank() == 0) return Broadcast::LeftScalar;
  if (b.rank() == 0) return Broadcast::RightScalar;
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                   shape_str(b.shape()));
}

// Shared shape/broadcast logic for add/sub/mul. `fwd(x, y)` computes the
// value; `dx(x, y)` and `dy(x, y)` give the local partials.
template <typename T, typename F, typename DX, typename DY>
Tensor<T> binary(const Tensor<T>& a, const Tensor<T>& b, const char* op, F fwd, DX dx, DY dy) {
  const auto mode = check_binary(a, b, op);
  const Shape out_shape = mode == Broadcast::LeftScalar ? b.shape() : a.shape();
  const std::size_t n = numel(out_shape);
  auto ad = a.data();
  auto bd = b.data();
  auto ai = [&](std::size_t i) { return mode == Broadcast::LeftScalar ? ad[0] : ad[i]; };
  auto bi = [&](std::size_t i) { return mode == Broadcast::RightScalar ? bd[0] : bd[i]; };
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = fwd(ai(i), bi(i));

  return make_op_result<T>(out_shape, std::move(out), {a, b}, op, [mode, dx, dy](detail::Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    const auto& g = self.grad;
    auto xa = [&](std::size_t i) { return mode == Broadcast::LeftScalar ? pa.data[0] : pa.data[i]; };
    auto yb = [&](std::size_t i) { return mode == Broadcast::RightScalar ? pb.data[0] : pb.data[i]; };
    if (pa.requires_grad) {
      auto& ga = pa.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        ga[mode == Broadcast::LeftScalar ? 0 : i] += g[i] * dx(xa(i), yb(i));
      }
    }
    if (pb.requires_grad) {
      auto& gb = pb.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        gb[mode == Broadcast::RightScalar ? 0 : i] += g[i] * dy(xa(i), yb(i));
      }
    }
  });
}

template <typename T, typename F, typename D>
Tensor<T> unary(const Tensor<T>& a, const char* op, F fwd, D deriv) {
  auto ad = a.data();
  std::vector<T> out(ad.size());
  for (std::size_t i = 0; i < ad.size(); ++i) out[i] = fwd(ad[i]);
  return make_op_result<T>(a.shape(), std::move(out), {a}, op, [deriv](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& gp = p.ensure_grad();
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += self.grad[i] * deriv(p.data[i], self.data[i]);
  });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, "add", [](T x, T y) { return x + y; }, [](T, T) { return T(1); },
                [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, "sub", [](T x, T y) { return x - y; }, [](T, T) { return T(1); },
                [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary(a, b, "mul", [](T x, T y) { return x * y; }, [](T, T y) { return y; },
                [](T x, T) { return x; });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  return unary(a, "scale", [factor](T x) { return x * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  return unary(a, "square", [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  return unary(a, "exp", [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
Tensor<T> log(const Tensor<T>& a) {
  return unary(a, "log", [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data()) s += v;
  return make_op_result<T>({}, {s}, {a}, "sum", [](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& gp = p.ensure_grad();
    for (auto& v : gp) v += self.grad[0];
  });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
  const T inv = T(1) / static_cast<T>(a.numel());
  T s = 0;
  for (T v : a.data()) s += v;
  return make_op_result<T>({}, {s * inv}, {a}, "mean", [inv](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& gp = p.ensure_grad();
    for (auto& v : gp) v += self.grad[0] * inv;
  });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " +
                     shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  std::vector<T> out(m * p, T(0));
  gemm_nn<T>(m, p, k, a.data().data(), b.data().data(), out.data());
  return make_op_result<T>({m, p}, std::move(out), {a, b}, "matmul", [m, k, p](detail::Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      // dA = dC * B^T
      gemm_nt<T>(m, k, p, self.grad.data(), pb.data.data(), pa.ensure_grad().data());
    }
    if (pb.requires_grad) {
      // dB = A^T * dC
      gemm_tn<T>(k, p, m, pa.data.data(), self.grad.data(), pb.ensure_grad().data());
    }
  });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel(shape) != a.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  std::vector<T> data(a.data().begin(), a.data().end());
  return make_op_result<T>(std::move(shape), std::move(data), {a}, "reshape", [](detail::Node<T>& self) {
    accumulate(*self.parents[0], self.grad);
  });
}

template <typename T>
Tensor<T> pick_columns(const Tensor<T>& a, std::span<const int> index) {
  if (a.rank() != 2 || index.size() != a.dim(0)) {
    throw ShapeError("pick_columns: expected [rows, cols] with one index per row, got " +
                     shape_str(a.shape()));
  }
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  std::vector<std::size_t> flat(rows);
  std::vector<T> out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    if (index[i] < 0 || static_cast<std::size_t>(index[i]) >= cols) {
      throw std::out_of_range("pick_columns: column " + std::to_string(index[i]) + " out of range");
    }
    flat[i] = i * cols + static_cast<std::size_t>(index[i]);
    out[i] = a.data()[flat[i]];
  }
  return make_op_result<T>({rows}, std::move(out), {a}, "pick_columns",
                           [flat = std::move(flat)](detail::Node<T>& self) {
                             auto& p = *self.parents[0];
                             if (!p.requires_grad) return;
                             auto& gp = p.ensure_grad();
                             for (std::size_t i = 0; i < flat.size(); ++i) gp[flat[i]] += self.grad[i];
                           });
}

#define LTBN_INSTANTIATE(T)                                                                     \
  template Tensor<T> make_op_result<T>(Shape, std::vector<T>, std::vector<Tensor<T>>,          \
                                       const char*, std::function<void(detail::Node<T>&)>);     \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                             \
  template Tensor<T> square<T>(const Tensor<T>&);                                               \
  template Tensor<T> exp<T>(const Tensor<T>&);                                                  \
  template Tensor<T> log<T>(const Tensor<T>&);                                                  \
  template Tensor<T> sum<T>(const Tensor<T>&);                                                  \
  template Tensor<T> mean<T>(const Tensor<T>&);                                                 \
  template Tensor<T> matmul<T>(const Tensor<T>&, const Tensor<T>&);                             \
  template Tensor<T> reshape<T>(const Tensor<T>&, Shape);                                       \
  template Tensor<T> pick_columns<T>(const Tensor<T>&, std::span<const int>);

LTBN_INSTANTIATE(float)
LTBN_INSTANTIATE(double)

#undef LTBN_INSTANTIATE

}  // namespace ltbn
