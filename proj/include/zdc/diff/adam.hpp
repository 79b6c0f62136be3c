#pragma once

#include <cstdint>
#include <vector>

#include "zdc/diff/autograd.hpp"

namespace zdc::diff {

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

/// Adam with bias correction over a fixed parameter list.
class Adam {
 public:
  Adam(std::vector<Var> params, AdamConfig config);

  /// Applies one update from the current gradients. Parameters without a
  /// gradient buffer are treated as having zero gradient.
  void step();
  void zero_grad();

  std::int64_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return config_; }

 private:
  std::vector<Var> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  AdamConfig config_;
  std::int64_t t_ = 0;
};

}  // namespace zdc::diff
