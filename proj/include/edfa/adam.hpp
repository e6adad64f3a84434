#pragma once

#include <cstdint>

#include "edfa/nn.hpp"

namespace edfa::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 1.0;  ///< global-norm clipping threshold; <= 0 disables
};

struct StepReport {
  double grad_norm = 0.0;     ///< global norm before clipping
  double clip_scale = 1.0;    ///< factor applied to every gradient
};

/// Scales `grads` in place so that their global norm is at most `max_norm`.
/// Returns the factor applied.
double clip_by_global_norm(Gradients& grads, double max_norm);

/// Adam with bias correction. Each layer's step is scaled by its
/// `lr_multiplier`; layers with multiplier 0 are left untouched and excluded
/// from the clipping norm.
class Adam {
 public:
  Adam(const Network& net, AdamConfig config);

  StepReport step(Network& net, Gradients grads);

  const AdamConfig& config() const { return config_; }
  std::uint64_t steps() const { return t_; }
  const Gradients& first_moments() const { return m_; }
  const Gradients& second_moments() const { return v_; }

 private:
  AdamConfig config_;
  Gradients m_;
  Gradients v_;
  std::uint64_t t_ = 0;
};

}  // namespace edfa::nn
