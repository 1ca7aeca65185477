#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "lighttbnet/layers.hpp"
#include "lighttbnet/tensor.hpp"

namespace ltbn {

struct FocalLossConfig {
  double gamma = 2.0;
  void validate() const;
};

/// Probability clamp applied to p_t before the log.
inline constexpr double kFocalClamp = 1e-7;

/// Mean over the batch of -(1 - p_t)^gamma * log(p_t), where p_t is the
/// probability `probs[i, labels[i]]` clamped to [1e-7, 1 - 1e-7]. Inside the
/// clamp the gradient flows to `probs`; at the clamp it is zero.
template <typename T>
Tensor<T> focal_loss(const Tensor<T>& probs, std::span<const int> labels, const FocalLossConfig& cfg);

/// Scalar reference used by tests and reports: -(1-p)^gamma * log(p).
double focal_term(double p_t, double gamma);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  void validate() const;
};

void to_json(nlohmann::json& j, const AdamConfig& c);
void from_json(const nlohmann::json& j, AdamConfig& c);

/// Adam with bias correction:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   w <- w - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// Gradients are read, never cleared. A parameter with no gradient buffer
/// is treated as having a zero gradient.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Tensor<T>> params, AdamConfig cfg);

  void step();
  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }
  std::span<const T> first_moment(std::size_t i) const { return m_.at(i); }
  std::span<const T> second_moment(std::size_t i) const { return v_.at(i); }

 private:
  std::vector<Tensor<T>> params_;
  AdamConfig cfg_;
  std::vector<std::vector<T>> m_;
  std::vector<std::vector<T>> v_;
  std::int64_t t_ = 0;
};

}  // namespace ltbn
