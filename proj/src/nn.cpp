#include "edfa/nn.hpp"

#include <cmath>
#include <random>

namespace edfa::nn {

Eigen::MatrixXd selu(const Eigen::MatrixXd& x) { return x.unaryExpr([](double v) { return selu(v); }); }

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act)
    : weights(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim))),
      biases(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out_dim))),
      activation(act) {}

bool DenseLayer::finite() const { return weights.allFinite() && biases.allFinite(); }

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    if (layers_[i].in_dim() != layers_[i - 1].out_dim()) {
      throw ConfigError("layer " + std::to_string(i) + " input width " + std::to_string(layers_[i].in_dim()) +
                        " does not match previous output width " + std::to_string(layers_[i - 1].out_dim()));
    }
  }
  for (const auto& l : layers_) {
    if (static_cast<std::size_t>(l.biases.size()) != l.out_dim()) throw ConfigError("bias length mismatch");
    if (!(l.lr_multiplier >= 0.0 && l.lr_multiplier <= 1.0)) throw ConfigError("lr multiplier must lie in [0, 1]");
  }
}

Network Network::ssnn(std::size_t input_dim) {
  std::vector<DenseLayer> layers;
  std::size_t in = input_dim;
  for (auto width : kHiddenWidths) {
    layers.emplace_back(in, width, Activation::Selu);
    in = width;
  }
  layers.emplace_back(in, kChannels, Activation::Linear);
  return Network(std::move(layers));
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.parameter_count();
  return n;
}

bool Network::finite() const {
  for (const auto& l : layers_) {
    if (!l.finite()) return false;
  }
  return true;
}

namespace {

void check_input(const Network& net, Eigen::Index rows) {
  if (static_cast<std::size_t>(rows) != net.input_dim()) {
    throw ConfigError("input dimension " + std::to_string(rows) + " does not match network input " +
                      std::to_string(net.input_dim()));
  }
}

}  // namespace

Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& x, ForwardCache* cache) {
  check_input(net, x.rows());
  if (cache) {
    cache->inputs.clear();
    cache->pre_activations.clear();
  }
  Eigen::MatrixXd a = x;
  for (const auto& layer : net.layers()) {
    Eigen::MatrixXd z = layer.weights * a;
    z.colwise() += layer.biases;
    if (cache) {
      cache->inputs.push_back(std::move(a));
      cache->pre_activations.push_back(z);
    }
    a = layer.activation == Activation::Selu ? selu(z) : std::move(z);
  }
  return a;
}

Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x) {
  return forward(net, Eigen::MatrixXd(x)).col(0);
}

Eigen::MatrixXd forward_prefix(const Network& net, const Eigen::MatrixXd& x, std::size_t n_layers) {
  check_input(net, x.rows());
  Eigen::MatrixXd a = x;
  for (std::size_t k = 0; k < n_layers; ++k) {
    const auto& layer = net.layer(k);
    Eigen::MatrixXd z = layer.weights * a;
    z.colwise() += layer.biases;
    a = layer.activation == Activation::Selu ? selu(z) : std::move(z);
  }
  return a;
}

Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& output_grad) {
  const std::size_t n = net.size();
  if (cache.inputs.size() != n || cache.pre_activations.size() != n) {
    throw ConfigError("forward cache does not match network");
  }
  Gradients grads(n);
  Eigen::MatrixXd delta = output_grad;
  for (std::size_t k = n; k-- > 0;) {
    const auto& layer = net.layer(k);
    if (layer.activation == Activation::Selu) {
      delta.array() *= cache.pre_activations[k].unaryExpr([](double v) { return selu_derivative(v); }).array();
    }
    grads[k].weights.noalias() = delta * cache.inputs[k].transpose();
    grads[k].biases = delta.rowwise().sum();
    if (k > 0) delta = layer.weights.transpose() * delta;
  }
  return grads;
}

double global_norm(const Gradients& grads) {
  double sq = 0.0;
  for (const auto& g : grads) sq += g.weights.squaredNorm() + g.biases.squaredNorm();
  return std::sqrt(sq);
}

void init_lecun(DenseLayer& layer, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(layer.in_dim())));
  for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = dist(rng);
  }
  layer.biases.setZero();
}

void init_lecun(Network& net, Rng& rng) {
  for (auto& layer : net.layers()) init_lecun(layer, rng);
}

double masked_mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target, const Eigen::VectorXd& mask) {
  if (pred.size() != target.size() || pred.size() != mask.size()) throw ConfigError("masked_mse size mismatch");
  const double active = mask.sum();
  if (active <= 0.0) throw ConfigError("masked_mse: channel mask has no active channel");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (mask[i] != 0.0) {
      const double r = pred[i] - target[i];
      sum += mask[i] * r * r;
    }
  }
  return sum / active;
}

LossAndGrad masked_mse_batch(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target, const Eigen::MatrixXd& mask) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.rows() != mask.rows() ||
      pred.cols() != mask.cols()) {
    throw ConfigError("masked_mse_batch shape mismatch");
  }
  const auto batch = static_cast<double>(pred.cols());
  LossAndGrad out;
  out.grad = Eigen::MatrixXd::Zero(pred.rows(), pred.cols());
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    const double active = mask.col(j).sum();
    if (active <= 0.0) throw ConfigError("masked_mse: channel mask has no active channel");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      if (mask(i, j) == 0.0) continue;
      const double r = pred(i, j) - target(i, j);
      sum += mask(i, j) * r * r;
      out.grad(i, j) = 2.0 * mask(i, j) * r / (active * batch);
    }
    out.loss += sum / active;
  }
  out.loss /= batch;
  return out;
}

LossAndGrad mse_batch(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw ConfigError("mse_batch shape mismatch");
  const auto n = static_cast<double>(pred.size());
  LossAndGrad out;
  out.grad = pred - target;
  out.loss = out.grad.squaredNorm() / n;
  out.grad *= 2.0 / n;
  return out;
}

}  // namespace edfa::nn
