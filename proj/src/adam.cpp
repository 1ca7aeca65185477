#include <cmath>
#include <stdexcept>

#include "lighttbnet/optim.hpp"

namespace ltbn {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("adam: lr must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("adam: betas must be in [0,1)");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("adam: eps must be positive");
}

void to_json(nlohmann::json& j, const AdamConfig& c) {
  j = nlohmann::json{{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}};
}

void from_json(const nlohmann::json& j, AdamConfig& c) {
  c = AdamConfig{};
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
}

template <typename T>
Adam<T>::Adam(std::vector<Tensor<T>> params, AdamConfig cfg) : params_(std::move(params)), cfg_(cfg) {
  cfg_.validate();
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), T(0));
    v_.emplace_back(p.numel(), T(0));
  }
}

template <typename T>
void Adam<T>::step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    if (p.has_grad() && p.grad().size() != p.numel()) {
      throw ShapeError("adam: gradient size " + std::to_string(p.grad().size()) + " does not match parameter " +
                       shape_str(p.shape()));
    }
  }
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (!p.has_grad()) continue;
    auto g = p.grad();
    auto w = p.mutable_data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double gj = g[j];
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double update = cfg_.lr * (mj / bc1) / (std::sqrt(vj / bc2) + cfg_.eps);
      w[j] = static_cast<T>(w[j] - update);
    }
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace ltbn
