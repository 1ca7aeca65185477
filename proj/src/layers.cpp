#include "lighttbnet/layers.hpp"

#include <cmath>

namespace ltbn {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

template <typename T>
Tensor<T> kaiming_uniform(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::vector<T> data(numel(shape));
  for (auto& v : data) v = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
  return Tensor<T>::from(std::move(shape), std::move(data), true);
}

template <typename T>
Conv2D<T>::Conv2D(std::size_t in, std::size_t out, std::size_t k, std::size_t pad, std::mt19937_64& rng)
    : in_channels(in),
      out_channels(out),
      kernel(k),
      padding(pad),
      weight(kaiming_uniform<T>({out, in, k, k}, in * k * k, rng)),
      bias(Tensor<T>::zeros({out}, true)) {}

template <typename T>
Tensor<T> Conv2D<T>::forward(const Tensor<T>& x) const {
  return conv2d(x, weight, bias, Conv2dGeometry{stride, padding});
}

template <typename T>
Shape Conv2D<T>::output_shape(const Shape& in) const {
  if (in.size() != 4 || in[1] != in_channels) {
    throw ShapeError("conv: input " + shape_str(in) + " incompatible with " +
                     std::to_string(in_channels) + " input channels");
  }
  const auto oh = conv_out_extent(in[2], kernel, stride, padding);
  const auto ow = conv_out_extent(in[3], kernel, stride, padding);
  if (oh == 0 || ow == 0) throw ShapeError("conv: empty output for input " + shape_str(in));
  return {in[0], out_channels, oh, ow};
}

template <typename T>
std::size_t Conv2D<T>::macs(const Shape& in) const {
  const auto out = output_shape(in);
  return in_channels * kernel * kernel * out_channels * out[2] * out[3];
}

template <typename T>
BatchNorm2D<T>::BatchNorm2D(std::size_t ch)
    : channels(ch),
      gamma(Tensor<T>::full({ch}, T(1), true)),
      beta(Tensor<T>::zeros({ch}, true)),
      running_mean(ch, T(0)),
      running_var(ch, T(1)) {}

template <typename T>
Tensor<T> BatchNorm2D<T>::forward(const Tensor<T>& x) {
  if (!training) return batch_norm2d_eval<T>(x, gamma, beta, running_mean, running_var, eps);
  BatchStats<T> stats;
  auto y = batch_norm2d_train<T>(x, gamma, beta, eps, &stats);
  for (std::size_t c = 0; c < channels; ++c) {
    running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * stats.mean[c];
    running_var[c] = (T(1) - momentum) * running_var[c] + momentum * stats.var_unbiased[c];
  }
  return y;
}

Shape MaxPool2D::output_shape(const Shape& in) const {
  if (in.size() != 4 || in[2] < size || in[3] < size) {
    throw ShapeError("pool: input " + shape_str(in) + " smaller than pool " + std::to_string(size));
  }
  return {in[0], in[1], (in[2] - size) / stride + 1, (in[3] - size) / stride + 1};
}

template <typename T>
Linear<T>::Linear(std::size_t in, std::size_t out, std::mt19937_64& rng)
    : in_features(in),
      out_features(out),
      weight(kaiming_uniform<T>({out, in}, in, rng)),
      bias(Tensor<T>::zeros({out}, true)) {}

template Tensor<float> kaiming_uniform<float>(Shape, std::size_t, std::mt19937_64&);
template Tensor<double> kaiming_uniform<double>(Shape, std::size_t, std::mt19937_64&);
template struct Conv2D<float>;
template struct Conv2D<double>;
template struct BatchNorm2D<float>;
template struct BatchNorm2D<double>;
template struct Linear<float>;
template struct Linear<double>;

}  // namespace ltbn
