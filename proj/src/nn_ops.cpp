#include "lighttbnet/nn_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lighttbnet/gemm.hpp"

namespace ltbn {

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                            std::size_t padding) {
  if (stride == 0) return 0;
  const std::size_t padded = in + 2 * padding;
  if (padded < kernel) return 0;
  return (padded - kernel) / stride + 1;
}

namespace {

struct ConvDims {
  std::size_t batch, in_c, h, w, out_c, kh, kw, oh, ow, stride, pad;
  std::size_t col_rows() const { return in_c * kh * kw; }
  std::size_t col_cols() const { return oh * ow; }
};

template <typename T>
void im2col(const T* img, const ConvDims& d, T* cols) {
  const std::size_t n = d.col_cols();
  for (std::size_t c = 0; c < d.in_c; ++c) {
    const T* plane = img + c * d.h * d.w;
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        T* row = cols + ((c * d.kh + ky) * d.kw + kx) * n;
        for (std::size_t oy = 0; oy < d.oh; ++oy) {
          const long iy = static_cast<long>(oy * d.stride + ky) - static_cast<long>(d.pad);
          T* dst = row + oy * d.ow;
          if (iy < 0 || iy >= static_cast<long>(d.h)) {
            std::fill(dst, dst + d.ow, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * d.w;
          for (std::size_t ox = 0; ox < d.ow; ++ox) {
            const long ix = static_cast<long>(ox * d.stride + kx) - static_cast<long>(d.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(d.w)) ? T(0) : src[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, const ConvDims& d, T* img) {
  const std::size_t n = d.col_cols();
  for (std::size_t c = 0; c < d.in_c; ++c) {
    T* plane = img + c * d.h * d.w;
    for (std::size_t ky = 0; ky < d.kh; ++ky) {
      for (std::size_t kx = 0; kx < d.kw; ++kx) {
        const T* row = cols + ((c * d.kh + ky) * d.kw + kx) * n;
        for (std::size_t oy = 0; oy < d.oh; ++oy) {
          const long iy = static_cast<long>(oy * d.stride + ky) - static_cast<long>(d.pad);
          if (iy < 0 || iy >= static_cast<long>(d.h)) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * d.w;
          const T* src = row + oy * d.ow;
          for (std::size_t ox = 0; ox < d.ow; ++ox) {
            const long ix = static_cast<long>(ox * d.stride + kx) - static_cast<long>(d.pad);
            if (ix >= 0 && ix < static_cast<long>(d.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void require_rank4(const Shape& s, const char* op) {
  if (s.size() != 4) {
    throw ShapeError(std::string(op) + ": expected [B,C,H,W], got " + shape_str(s));
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 Conv2dGeometry geom) {
  require_rank4(x.shape(), "conv2d");
  if (weight.rank() != 4) throw ShapeError("conv2d: weight must be [O,C,kh,kw], got " + shape_str(weight.shape()));
  if (x.dim(1) != weight.dim(1)) {
    throw ShapeError("conv2d: input has " + std::to_string(x.dim(1)) + " channels, layer expects " +
                     std::to_string(weight.dim(1)));
  }
  if (bias.shape() != Shape{weight.dim(0)}) {
    throw ShapeError("conv2d: bias shape " + shape_str(bias.shape()) + " does not match " +
                     std::to_string(weight.dim(0)) + " output channels");
  }
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), weight.dim(3),
             0, 0, geom.stride, geom.padding};
  d.oh = conv_out_extent(d.h, d.kh, d.stride, d.pad);
  d.ow = conv_out_extent(d.w, d.kw, d.stride, d.pad);
  if (d.oh == 0 || d.ow == 0) {
    throw ShapeError("conv2d: output would be empty (" + std::to_string(d.oh) + "x" +
                     std::to_string(d.ow) + ") for input " + shape_str(x.shape()) + " and kernel " +
                     shape_str(weight.shape()));
  }

  const std::size_t rows = d.col_rows(), ncol = d.col_cols();
  const std::size_t in_plane = d.in_c * d.h * d.w, out_plane = d.out_c * ncol;
  std::vector<T> out(d.batch * out_plane);
  std::vector<T> cols(rows * ncol);
  const T* xd = x.data().data();
  const T* wd = weight.data().data();
  const T* bd = bias.data().data();
  for (std::size_t b = 0; b < d.batch; ++b) {
    T* ob = out.data() + b * out_plane;
    for (std::size_t o = 0; o < d.out_c; ++o) std::fill(ob + o * ncol, ob + (o + 1) * ncol, bd[o]);
    im2col(xd + b * in_plane, d, cols.data());
    gemm_nn<T>(d.out_c, ncol, rows, wd, cols.data(), ob);
  }

  return make_op_result<T>({d.batch, d.out_c, d.oh, d.ow}, std::move(out), {x, weight, bias}, "conv2d",
                           [d](detail::Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    auto& pb = *self.parents[2];
    const std::size_t rows = d.col_rows(), ncol = d.col_cols();
    const std::size_t in_plane = d.in_c * d.h * d.w, out_plane = d.out_c * ncol;
    std::vector<T> cols(rows * ncol);
    std::vector<T> dcols;
    if (px.requires_grad) dcols.resize(rows * ncol);
    for (std::size_t b = 0; b < d.batch; ++b) {
      const T* gb = self.grad.data() + b * out_plane;
      if (pb.requires_grad) {
        auto& g = pb.ensure_grad();
        for (std::size_t o = 0; o < d.out_c; ++o) {
          T s = 0;
          for (std::size_t j = 0; j < ncol; ++j) s += gb[o * ncol + j];
          g[o] += s;
        }
      }
      if (pw.requires_grad) {
        im2col(px.data.data() + b * in_plane, d, cols.data());
        gemm_nt<T>(d.out_c, rows, ncol, gb, cols.data(), pw.ensure_grad().data());
      }
      if (px.requires_grad) {
        std::fill(dcols.begin(), dcols.end(), T(0));
        gemm_tn<T>(rows, ncol, d.out_c, pw.data.data(), gb, dcols.data());
        col2im(dcols.data(), d, px.ensure_grad().data() + b * in_plane);
      }
    }
  });
}

template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& x, std::size_t size, std::size_t stride) {
  require_rank4(x.shape(), "max_pool2d");
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (size == 0 || stride == 0 || size > h || size > w) {
    throw ShapeError("max_pool2d: pool " + std::to_string(size) + " does not fit input " +
                     shape_str(x.shape()));
  }
  const std::size_t oh = (h - size) / stride + 1, ow = (w - size) / stride + 1;
  std::vector<T> out(batch * ch * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  const T* xd = x.data().data();
  for (std::size_t plane = 0; plane < batch * ch; ++plane) {
    const T* src = xd + plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = (oy * stride) * w + ox * stride;
        for (std::size_t ky = 0; ky < size; ++ky) {
          for (std::size_t kx = 0; kx < size; ++kx) {
            const std::size_t idx = (oy * stride + ky) * w + ox * stride + kx;
            if (src[idx] > src[best]) best = idx;
          }
        }
        const std::size_t o = (plane * oh + oy) * ow + ox;
        out[o] = src[best];
        argmax[o] = plane * h * w + best;
      }
    }
  }
  return make_op_result<T>({batch, ch, oh, ow}, std::move(out), {x}, "max_pool2d",
                           [argmax = std::move(argmax)](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < argmax.size(); ++i) g[argmax[i]] += self.grad[i];
  });
}

namespace {

template <typename T>
void check_bn_params(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta) {
  require_rank4(x.shape(), "batch_norm2d");
  const Shape expect{x.dim(1)};
  if (gamma.shape() != expect || beta.shape() != expect) {
    throw ShapeError("batch_norm2d: gamma/beta must be " + shape_str(expect) + ", got " +
                     shape_str(gamma.shape()) + " / " + shape_str(beta.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> batch_norm2d_train(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                             T eps, BatchStats<T>* stats) {
  check_bn_params(x, gamma, beta);
  const std::size_t batch = x.dim(0), ch = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (batch < 2) {
    throw ShapeError("batch_norm2d: training mode needs a batch of at least 2, got " +
                     std::to_string(batch));
  }
  const std::size_t count = batch * hw;
  const T* xd = x.data().data();
  std::vector<T> xhat(x.numel()), out(x.numel()), inv_std(ch);
  std::vector<T> mean_v(ch), var_v(ch);
  for (std::size_t c = 0; c < ch; ++c) {
    T s = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      const T* p = xd + (b * ch + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) s += p[i];
    }
    const T mu = s / static_cast<T>(count);
    T ss = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      const T* p = xd + (b * ch + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) ss += (p[i] - mu) * (p[i] - mu);
    }
    const T var = ss / static_cast<T>(count);
    mean_v[c] = mu;
    var_v[c] = ss / static_cast<T>(count - 1);
    inv_std[c] = T(1) / std::sqrt(var + eps);
    const T g = gamma.data()[c], bt = beta.data()[c];
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t off = (b * ch + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        const T xh = (xd[off + i] - mu) * inv_std[c];
        xhat[off + i] = xh;
        out[off + i] = g * xh + bt;
      }
    }
  }
  if (stats) {
    stats->mean = std::move(mean_v);
    stats->var_unbiased = std::move(var_v);
  }

  return make_op_result<T>(x.shape(), std::move(out), {x, gamma, beta}, "batch_norm2d_train",
                           [batch, ch, hw, xhat = std::move(xhat),
                            inv_std = std::move(inv_std)](detail::Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pg = *self.parents[1];
    auto& pbeta = *self.parents[2];
    const T m = static_cast<T>(batch * hw);
    const auto& dy = self.grad;
    for (std::size_t c = 0; c < ch; ++c) {
      T sum_dy = 0, sum_dy_xhat = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * ch + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          sum_dy += dy[off + i];
          sum_dy_xhat += dy[off + i] * xhat[off + i];
        }
      }
      if (pg.requires_grad) pg.ensure_grad()[c] += sum_dy_xhat;
      if (pbeta.requires_grad) pbeta.ensure_grad()[c] += sum_dy;
      if (px.requires_grad) {
        auto& gx = px.ensure_grad();
        const T k = pg.data[c] * inv_std[c] / m;
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t off = (b * ch + c) * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            gx[off + i] += k * (m * dy[off + i] - sum_dy - xhat[off + i] * sum_dy_xhat);
          }
        }
      }
    }
  });
}

template <typename T>
Tensor<T> batch_norm2d_eval(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            std::span<const T> running_mean, std::span<const T> running_var,
                            T eps) {
  check_bn_params(x, gamma, beta);
  const std::size_t batch = x.dim(0), ch = x.dim(1), hw = x.dim(2) * x.dim(3);
  if (running_mean.size() != ch || running_var.size() != ch) {
    throw ShapeError("batch_norm2d: running statistics do not match channel count");
  }
  std::vector<T> inv_std(ch);
  for (std::size_t c = 0; c < ch; ++c) inv_std[c] = T(1) / std::sqrt(running_var[c] + eps);
  std::vector<T> mu(running_mean.begin(), running_mean.end());
  const T* xd = x.data().data();
  std::vector<T> out(x.numel());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t c = 0; c < ch; ++c) {
      const std::size_t off = (b * ch + c) * hw;
      const T g = gamma.data()[c], bt = beta.data()[c];
      for (std::size_t i = 0; i < hw; ++i) out[off + i] = g * (xd[off + i] - mu[c]) * inv_std[c] + bt;
    }
  }
  return make_op_result<T>(x.shape(), std::move(out), {x, gamma, beta}, "batch_norm2d_eval",
                           [batch, ch, hw, mu = std::move(mu),
                            inv_std = std::move(inv_std)](detail::Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pg = *self.parents[1];
    auto& pbeta = *self.parents[2];
    const auto& dy = self.grad;
    for (std::size_t c = 0; c < ch; ++c) {
      T sum_dy = 0, sum_dy_xhat = 0;
      for (std::size_t b = 0; b < batch; ++b) {
        const std::size_t off = (b * ch + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          sum_dy += dy[off + i];
          sum_dy_xhat += dy[off + i] * (px.data[off + i] - mu[c]) * inv_std[c];
        }
      }
      if (pg.requires_grad) pg.ensure_grad()[c] += sum_dy_xhat;
      if (pbeta.requires_grad) pbeta.ensure_grad()[c] += sum_dy;
      if (px.requires_grad) {
        auto& gx = px.ensure_grad();
        const T k = pg.data[c] * inv_std[c];
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t off = (b * ch + c) * hw;
          for (std::size_t i = 0; i < hw; ++i) gx[off + i] += k * dy[off + i];
        }
      }
    }
  });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  auto xd = x.data();
  std::vector<T> out(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) out[i] = xd[i] > T(0) ? xd[i] : T(0);
  return make_op_result<T>(x.shape(), std::move(out), {x}, "relu", [](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (p.data[i] > T(0)) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank4(a.shape(), "concat_channels");
  require_rank4(b.shape(), "concat_channels");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels: batch/spatial mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  const std::size_t batch = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
  std::vector<T> out(batch * (ca + cb) * hw);
  for (std::size_t n = 0; n < batch; ++n) {
    auto src_a = a.data().subspan(n * ca * hw, ca * hw);
    auto src_b = b.data().subspan(n * cb * hw, cb * hw);
    auto dst = out.begin() + static_cast<long>(n * (ca + cb) * hw);
    std::copy(src_a.begin(), src_a.end(), dst);
    std::copy(src_b.begin(), src_b.end(), dst + static_cast<long>(ca * hw));
  }
  return make_op_result<T>({batch, ca + cb, a.dim(2), a.dim(3)}, std::move(out), {a, b}, "concat_channels",
                           [batch, ca, cb, hw](detail::Node<T>& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    for (std::size_t n = 0; n < batch; ++n) {
      const T* g = self.grad.data() + n * (ca + cb) * hw;
      if (pa.requires_grad) {
        T* dst = pa.ensure_grad().data() + n * ca * hw;
        for (std::size_t i = 0; i < ca * hw; ++i) dst[i] += g[i];
      }
      if (pb.requires_grad) {
        T* dst = pb.ensure_grad().data() + n * cb * hw;
        for (std::size_t i = 0; i < cb * hw; ++i) dst[i] += g[ca * hw + i];
      }
    }
  });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || x.dim(1) != weight.dim(1) ||
      bias.shape() != Shape{weight.dim(0)}) {
    throw ShapeError("linear: incompatible shapes x" + shape_str(x.shape()) + " weight" +
                     shape_str(weight.shape()) + " bias" + shape_str(bias.shape()));
  }
  const std::size_t batch = x.dim(0), in = x.dim(1), out_f = weight.dim(0);
  std::vector<T> out(batch * out_f);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy(bias.data().begin(), bias.data().end(), out.begin() + static_cast<long>(b * out_f));
  }
  gemm_nt<T>(batch, out_f, in, x.data().data(), weight.data().data(), out.data());
  return make_op_result<T>({batch, out_f}, std::move(out), {x, weight, bias}, "linear",
                           [batch, in, out_f](detail::Node<T>& self) {
    auto& px = *self.parents[0];
    auto& pw = *self.parents[1];
    auto& pb = *self.parents[2];
    const T* dy = self.grad.data();
    if (px.requires_grad) gemm_nn<T>(batch, in, out_f, dy, pw.data.data(), px.ensure_grad().data());
    if (pw.requires_grad) gemm_tn<T>(out_f, in, batch, dy, px.data.data(), pw.ensure_grad().data());
    if (pb.requires_grad) {
      auto& g = pb.ensure_grad();
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t o = 0; o < out_f; ++o) g[o] += dy[b * out_f + o];
      }
    }
  });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  if (logits.rank() != 2) throw ShapeError("softmax_rows: expected [B,K], got " + shape_str(logits.shape()));
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  const T* z = logits.data().data();
  std::vector<T> out(rows * k);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* zr = z + r * k;
    T* yr = out.data() + r * k;
    const T zmax = *std::max_element(zr, zr + k);
    T s = 0;
    for (std::size_t j = 0; j < k; ++j) {
      yr[j] = std::exp(zr[j] - zmax);
      s += yr[j];
    }
    for (std::size_t j = 0; j < k; ++j) yr[j] /= s;
  }
  return make_op_result<T>(logits.shape(), std::move(out), {logits}, "softmax_rows",
                           [rows, k](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t r = 0; r < rows; ++r) {
      const T* y = self.data.data() + r * k;
      const T* dy = self.grad.data() + r * k;
      T dot = 0;
      for (std::size_t j = 0; j < k; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < k; ++j) g[r * k + j] += y[j] * (dy[j] - dot);
    }
  });
}

template <typename T>
Tensor<T> flatten(const Tensor<T>& x) {
  if (x.rank() < 2) throw ShapeError("flatten: expected a batch dimension, got " + shape_str(x.shape()));
  return reshape(x, Shape{x.dim(0), x.numel() / x.dim(0)});
}

#define LTBN_INSTANTIATE(T)                                                                          \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Conv2dGeometry); \
  template Tensor<T> max_pool2d<T>(const Tensor<T>&, std::size_t, std::size_t);                      \
  template Tensor<T> batch_norm2d_train<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T,  \
                                           BatchStats<T>*);                                          \
  template Tensor<T> batch_norm2d_eval<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                          std::span<const T>, std::span<const T>, T);                \
  template Tensor<T> relu<T>(const Tensor<T>&);                                                      \
  template Tensor<T> concat_channels<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> linear<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> softmax_rows<T>(const Tensor<T>&);                                              \
  template Tensor<T> flatten<T>(const Tensor<T>&);

LTBN_INSTANTIATE(float)
LTBN_INSTANTIATE(double)

#undef LTBN_INSTANTIATE

}  // namespace ltbn
