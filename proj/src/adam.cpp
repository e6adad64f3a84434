#include "edfa/adam.hpp"

#include <cmath>

namespace edfa::nn {

double clip_by_global_norm(Gradients& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm <= 0.0 || norm <= max_norm) return 1.0;
  const double scale = max_norm / norm;
  for (auto& g : grads) {
    g.weights *= scale;
    g.biases *= scale;
  }
  return scale;
}

Adam::Adam(const Network& net, AdamConfig config) : config_(config) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0 && config_.beta2 >= 0.0 && config_.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  for (const auto& layer : net.layers()) {
    m_.push_back({Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols()),
                  Eigen::VectorXd::Zero(layer.biases.size())});
  }
  v_ = m_;
}

StepReport Adam::step(Network& net, Gradients grads) {
  if (grads.size() != net.size() || m_.size() != net.size()) throw ConfigError("gradient/network layer count mismatch");
  for (std::size_t k = 0; k < grads.size(); ++k) {
    const auto& layer = net.layer(k);
    if (grads[k].weights.rows() != layer.weights.rows() || grads[k].weights.cols() != layer.weights.cols() ||
        grads[k].biases.size() != layer.biases.size()) {
      throw ConfigError("gradient shape mismatch at layer " + std::to_string(k));
    }
    if (layer.lr_multiplier == 0.0) {
      grads[k].weights.setZero();
      grads[k].biases.setZero();
    } else if (!grads[k].weights.allFinite() || !grads[k].biases.allFinite()) {
      throw TrainingError("non-finite gradient in layer " + std::to_string(k) + " at step " + std::to_string(t_ + 1));
    }
  }

  StepReport report;
  report.grad_norm = global_norm(grads);
  report.clip_scale = clip_by_global_norm(grads, config_.clip_norm);

  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  const double eps = config_.epsilon;
  for (std::size_t k = 0; k < grads.size(); ++k) {
    auto& layer = net.layer(k);
    if (layer.lr_multiplier == 0.0) continue;
    const double lr = config_.learning_rate * layer.lr_multiplier;
    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
      m = b1 * m + (1.0 - b1) * g;
      v.array() = b2 * v.array() + (1.0 - b2) * g.array().square();
      param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
    };
    update(layer.weights, m_[k].weights, v_[k].weights, grads[k].weights);
    update(layer.biases, m_[k].biases, v_[k].biases, grads[k].biases);
  }
  return report;
}

}  // namespace edfa::nn
