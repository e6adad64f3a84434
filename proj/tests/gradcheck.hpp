#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "edfa/nn.hpp"
#include "edfa/rng.hpp"

namespace edfa::test {

struct GradCheckResult {
  double worst_rel_error = 0.0;
  std::size_t parameters = 0;
};

// Random network of 1-3 layers, at most 20 parameters per layer, with random
// inputs and a random linear read-out of the output. Compares every analytic
// parameter gradient with a central difference (h = 1e-4). The relative error
// uses max(|analytic|, |numeric|, 1e-2) as denominator so that near-zero
// gradients are judged on truncation error rather than on noise.
inline GradCheckResult gradient_check(Rng& rng) {
  using namespace edfa::nn;
  std::uniform_int_distribution<int> n_layers_dist(1, 3);
  std::uniform_int_distribution<int> width(1, 4);
  const int n_layers = n_layers_dist(rng);
  std::vector<DenseLayer> layers;
  std::size_t in = static_cast<std::size_t>(width(rng));
  for (int l = 0; l < n_layers; ++l) {
    const auto out = static_cast<std::size_t>(width(rng));
    layers.emplace_back(in, out, l + 1 == n_layers ? Activation::Linear : Activation::Selu);
    in = out;
  }
  Network net(std::move(layers));
  std::normal_distribution<double> z(0.0, 1.0);
  for (auto& l : net.layers()) {
    for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = z(rng);
    for (Eigen::Index i = 0; i < l.biases.size(); ++i) l.biases[i] = 0.5 * z(rng);
  }
  const Eigen::Index batch = 3;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(net.input_dim()), batch);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = z(rng);
  Eigen::MatrixXd readout(static_cast<Eigen::Index>(net.output_dim()), batch);
  for (Eigen::Index i = 0; i < readout.size(); ++i) readout.data()[i] = z(rng);

  auto objective = [&](const Network& n) { return (forward(n, x).array() * readout.array()).sum(); };
  ForwardCache cache;
  forward(net, x, &cache);
  const auto grads = backward(net, cache, readout);

  GradCheckResult res;
  const double h = 1e-4;
  auto compare = [&](double analytic, double& param) {
    const double saved = param;
    param = saved + h;
    const double up = objective(net);
    param = saved - h;
    const double down = objective(net);
    param = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-2});
    res.worst_rel_error = std::max(res.worst_rel_error, std::abs(analytic - numeric) / scale);
    ++res.parameters;
  };
  for (std::size_t l = 0; l < net.size(); ++l) {
    auto& layer = net.layer(l);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) compare(grads[l].weights.data()[i], layer.weights.data()[i]);
    for (Eigen::Index i = 0; i < layer.biases.size(); ++i) compare(grads[l].biases[i], layer.biases[i]);
  }
  return res;
}

}  // namespace edfa::test
