#include "zdc/diff/adam.hpp"

#include <cmath>

namespace zdc::diff {

Adam::Adam(std::vector<Var> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.shape(), 0.0f);
    v_.emplace_back(p.shape(), 0.0f);
  }
}

void Adam::step() {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    if (!p.has_grad()) continue;
    const Tensor& g = p.grad();
    Tensor& w = p.mutable_value();
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * gi);
      v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * gi * gi);
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] = static_cast<float>(w[i] - config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps));
    }
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace zdc::diff
