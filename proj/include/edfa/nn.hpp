#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "edfa/common.hpp"
#include "edfa/rng.hpp"

namespace edfa::nn {

inline constexpr double kSeluAlpha = 1.673;
inline constexpr double kSeluLambda = 1.050;

inline double selu(double x) { return x > 0.0 ? kSeluLambda * x : kSeluLambda * (kSeluAlpha * std::exp(x) - kSeluAlpha); }
inline double selu_derivative(double x) { return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x); }

Eigen::MatrixXd selu(const Eigen::MatrixXd& x);

enum class Activation { Selu, Linear };

struct DenseLayer {
  Eigen::MatrixXd weights;  ///< out x in
  Eigen::VectorXd biases;
  Activation activation = Activation::Selu;
  double lr_multiplier = 1.0;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation act);

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t parameter_count() const { return static_cast<std::size_t>(weights.size() + biases.size()); }
  bool finite() const;
};

class Network {
 public:
  Network() = default;
  explicit Network(std::vector<DenseLayer> layers);

  /// input -> 200 -> 200 -> 100 -> 100 (SELU) -> 95 (linear)
  static Network ssnn(std::size_t input_dim);
  /// Hidden widths used by `ssnn`.
  static constexpr std::array<std::size_t, 4> kHiddenWidths{200, 200, 100, 100};

  std::size_t input_dim() const { return layers_.front().in_dim(); }
  std::size_t output_dim() const { return layers_.back().out_dim(); }
  std::size_t size() const { return layers_.size(); }
  std::size_t parameter_count() const;

  DenseLayer& layer(std::size_t i) { return layers_.at(i); }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  std::span<DenseLayer> layers() { return layers_; }
  std::span<const DenseLayer> layers() const { return layers_; }

  bool finite() const;

 private:
  std::vector<DenseLayer> layers_;
};

/// Per-layer inputs and pre-activations of one batched forward pass.
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;
  std::vector<Eigen::MatrixXd> pre_activations;
};

/// Columns of `x` are samples. Fills `cache` when given.
Eigen::MatrixXd forward(const Network& net, const Eigen::MatrixXd& x, ForwardCache* cache = nullptr);
Eigen::VectorXd forward(const Network& net, const Eigen::VectorXd& x);
/// Output of the first `n_layers` layers.
Eigen::MatrixXd forward_prefix(const Network& net, const Eigen::MatrixXd& x, std::size_t n_layers);

struct LayerGradient {
  Eigen::MatrixXd weights;
  Eigen::VectorXd biases;
};
using Gradients = std::vector<LayerGradient>;

/// Gradients of sum-over-batch of (output_grad . output) w.r.t. every parameter.
Gradients backward(const Network& net, const ForwardCache& cache, const Eigen::MatrixXd& output_grad);

double global_norm(const Gradients& grads);

/// Weights ~ Normal(0, 1/fan_in), biases 0.
void init_lecun(Network& net, Rng& rng);
void init_lecun(DenseLayer& layer, Rng& rng);

struct LossAndGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad;  ///< d loss / d prediction, same shape as the prediction
};

/// Masked squared error of one measurement, averaged over its active channels.
double masked_mse(const Eigen::VectorXd& pred, const Eigen::VectorXd& target, const Eigen::VectorXd& mask);

/// Batch mean of per-measurement masked MSE with its gradient.
LossAndGrad masked_mse_batch(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target, const Eigen::MatrixXd& mask);

/// Plain mean squared error over all entries with its gradient.
LossAndGrad mse_batch(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

}  // namespace edfa::nn
