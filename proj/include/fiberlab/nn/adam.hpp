#pragma once

#include <cstdint>
#include <vector>

#include "fiberlab/nn/tensor.hpp"

namespace fiberlab::nn {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.85;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction. Moments are matched to parameters by
/// position, so the same parameter list must be passed on every step.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(const std::vector<Param*>& params);
  std::uint64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace fiberlab::nn
