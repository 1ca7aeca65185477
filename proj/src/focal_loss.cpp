#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "lighttbnet/optim.hpp"

namespace ltbn {

void FocalLossConfig::validate() const {
  if (!(gamma >= 0.0)) throw std::invalid_argument("focal loss: gamma must be >= 0");
}

double focal_term(double p_t, double gamma) {
  return -std::pow(1.0 - p_t, gamma) * std::log(p_t);
}

template <typename T>
Tensor<T> focal_loss(const Tensor<T>& probs, std::span<const int> labels, const FocalLossConfig& cfg) {
  cfg.validate();
  if (probs.rank() != 2 || probs.dim(0) != labels.size()) {
    throw ShapeError("focal_loss: probs " + shape_str(probs.shape()) + " vs " + std::to_string(labels.size()) +
                     " labels");
  }
  const std::size_t batch = probs.dim(0), k = probs.dim(1);
  const T lo = static_cast<T>(kFocalClamp), hi = T(1) - static_cast<T>(kFocalClamp);
  const T gamma = static_cast<T>(cfg.gamma);
  std::vector<std::size_t> flat(batch);
  std::vector<T> dloss_dp(batch);
  T total = 0;
  for (std::size_t i = 0; i < batch; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k) {
      throw std::invalid_argument("focal_loss: invalid label " + std::to_string(labels[i]));
    }
    flat[i] = i * k + static_cast<std::size_t>(labels[i]);
    const T raw = probs.data()[flat[i]];
    const T p = std::clamp(raw, lo, hi);
    const T q = T(1) - p;
    const T lp = std::log(p);
    const T mod = gamma == T(0) ? T(1) : std::pow(q, gamma);
    total += -mod * lp;
    if (raw > lo && raw < hi) {
      // d/dp [-(1-p)^g log p] = g (1-p)^(g-1) log p - (1-p)^g / p
      const T dmod = gamma == T(0) ? T(0) : gamma * std::pow(q, gamma - T(1));
      dloss_dp[i] = dmod * lp - mod / p;
    }
  }
  const T inv_b = T(1) / static_cast<T>(batch);
  return make_op_result<T>({}, {total * inv_b}, {probs}, "focal_loss",
                           [flat = std::move(flat), dloss_dp = std::move(dloss_dp), inv_b](detail::Node<T>& self) {
    auto& p = *self.parents[0];
    if (!p.requires_grad) return;
    auto& g = p.ensure_grad();
    for (std::size_t i = 0; i < flat.size(); ++i) g[flat[i]] += self.grad[0] * dloss_dp[i] * inv_b;
  });
}

template Tensor<float> focal_loss<float>(const Tensor<float>&, std::span<const int>, const FocalLossConfig&);
template Tensor<double> focal_loss<double>(const Tensor<double>&, std::span<const int>, const FocalLossConfig&);

}  // namespace ltbn
