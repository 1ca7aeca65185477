#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lighttbnet/nn_ops.hpp"
#include "lighttbnet/tensor.hpp"

namespace ltbn {

/// Uniform double in [0,1) from the top 53 bits; portable across standard
/// libraries, unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng);

/// Kaiming-uniform for ReLU nets: U(-b, b), b = sqrt(6 / fan_in).
template <typename T>
Tensor<T> kaiming_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

/// 2-D convolution with zero padding. Weight layout [out, in, k, k].
template <typename T>
struct Conv2D {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;
  Tensor<T> weight;
  Tensor<T> bias;

  Conv2D() = default;
  Conv2D(std::size_t in, std::size_t out, std::size_t k, std::size_t pad, std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x) const;
  Shape output_shape(const Shape& in) const;
  std::size_t param_count() const { return in_channels * kernel * kernel * out_channels + out_channels; }
  std::size_t macs(const Shape& in) const;
};

template <typename T>
struct BatchNorm2D {
  std::size_t channels = 0;
  T momentum = T(0.1);
  T eps = T(1e-5);
  bool training = true;
  Tensor<T> gamma;
  Tensor<T> beta;
  std::vector<T> running_mean;
  std::vector<T> running_var;

  BatchNorm2D() = default;
  explicit BatchNorm2D(std::size_t ch);

  /// Train mode normalizes with batch statistics and folds them into the
  /// running averages; eval mode uses the running averages only.
  Tensor<T> forward(const Tensor<T>& x);
  std::size_t param_count() const { return 2 * channels; }
};

struct MaxPool2D {
  std::size_t size = 2;
  std::size_t stride = 2;

  template <typename T>
  Tensor<T> forward(const Tensor<T>& x) const { return max_pool2d(x, size, stride); }
  Shape output_shape(const Shape& in) const;
};

template <typename T>
struct Linear {
  std::size_t in_features = 0;
  std::size_t out_features = 0;
  Tensor<T> weight;  // [out, in]
  Tensor<T> bias;

  Linear() = default;
  Linear(std::size_t in, std::size_t out, std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x) const { return linear(x, weight, bias); }
  std::size_t param_count() const { return in_features * out_features + out_features; }
  std::size_t macs() const { return in_features * out_features; }
};

}  // namespace ltbn
