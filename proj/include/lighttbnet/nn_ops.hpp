#pragma once

#include <span>
#include <vector>

#include "lighttbnet/tensor.hpp"

namespace ltbn {

struct Conv2dGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;  // zero padding on every side
};

/// Output extent along one axis: floor((in + 2p - k) / s) + 1, or 0 when the
/// kernel does not fit.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                            std::size_t padding);

/// Cross-correlation (no kernel flip) of x[B,C,H,W] with w[O,C,kh,kw] plus
/// bias[O]. Lowered to im2col + GEMM per image.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 Conv2dGeometry geom);

/// Max over size x size windows. Odd trailing rows/columns are dropped. On
/// ties the first element in row-major window order receives the gradient.
template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, std::size_t size, std::size_t stride);

template <typename T>
struct BatchStats {
  std::vector<T> mean;
  std::vector<T> var_unbiased;
};

/// Training-mode batch norm over (B,H,W) per channel. Fills `stats` with the
/// batch mean and unbiased variance for the running-average update.
template <typename T>
Tensor<T> batch_norm2d_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                             T eps, BatchStats<T>* stats);

template <typename T>
Tensor<T> batch_norm2d_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            std::span<const T> running_mean, std::span<const T> running_var,
                            T eps);

template <typename T> Tensor<T> relu(const Tensor<T>& x);

/// [B,Ca,H,W] ++ [B,Cb,H,W] -> [B,Ca+Cb,H,W], a's channels first.
template <typename T> Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b);

/// x[B,in] * weight[out,in]^T + bias[out]
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

/// Row-wise softmax of a [B,K] tensor.
template <typename T> Tensor<T> softmax_rows(const Tensor<T>& logits);

/// [B, ...] -> [B, prod(...)]
template <typename T> Tensor<T> flatten(const Tensor<T>& x);

}  // namespace ltbn
