#include <doctest.h>

#include <cmath>
#include <random>

#include "edfa/adam.hpp"
#include "edfa/nn.hpp"
#include "edfa/rng.hpp"
#include "gradcheck.hpp"

using namespace edfa;
using namespace edfa::nn;

TEST_SUITE("nncore") {
  TEST_CASE("selu values") {
    CHECK(selu(0.0) == 0.0);
    CHECK(selu(1.0) == doctest::Approx(1.050).epsilon(1e-12));
    // lambda * (alpha * exp(-20) - alpha)
    const double expected = 1.050 * (1.673 * std::exp(-20.0) - 1.673);
    CHECK(std::abs(selu(-20.0) - expected) < 1e-12);
    CHECK(std::abs(selu(-20.0) - (-1.75665)) < 1e-6);
    CHECK(selu_derivative(2.0) == 1.050);
  }

  TEST_CASE("forward special cases") {
    DenseLayer zero(4, 3, Activation::Selu);
    zero.weights.setZero();
    zero.biases.setZero();
    DenseLayer out(3, 2, Activation::Linear);
    out.weights.setZero();
    out.biases.setZero();
    const Network net({zero, out});
    CHECK(forward(net, Eigen::VectorXd(Eigen::VectorXd::Random(4))).isZero(0.0));

    DenseLayer id(5, 5, Activation::Linear);
    id.weights.setIdentity();
    id.biases.setZero();
    const Network ident({id});
    const Eigen::VectorXd x = Eigen::VectorXd::Random(5);
    CHECK(forward(ident, x) == x);
    CHECK_THROWS_AS(forward(ident, Eigen::VectorXd(Eigen::VectorXd::Zero(4))), ConfigError);
  }

  TEST_CASE("random network is bit-reproducible") {
    Network a = Network::ssnn(196), b = Network::ssnn(196);
    Rng r1(9), r2(9);
    init_lecun(a, r1);
    init_lecun(b, r2);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(196, 7);
    CHECK(forward(a, x) == forward(b, x));
  }

  TEST_CASE("network topology") {
    const auto net = Network::ssnn(193);
    REQUIRE(net.size() == 5);
    CHECK(net.input_dim() == 193);
    CHECK(net.output_dim() == 95);
    CHECK(net.layer(3).out_dim() == 100);
    CHECK(net.layer(4).activation == Activation::Linear);
    CHECK_THROWS_AS(Network({DenseLayer(3, 4, Activation::Selu), DenseLayer(5, 2, Activation::Linear)}), ConfigError);
  }

  TEST_CASE("backward matches finite differences") {
    Rng rng(123);
    for (int trial = 0; trial < 10; ++trial) {
      const auto res = edfa::test::gradient_check(rng);
      CHECK(res.worst_rel_error < 1e-4);
    }
  }

  TEST_CASE("zero output gradient gives zero gradients") {
    Rng rng(4);
    Network net({DenseLayer(6, 5, Activation::Selu), DenseLayer(5, 3, Activation::Linear)});
    init_lecun(net, rng);
    ForwardCache cache;
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 4);
    forward(net, x, &cache);
    const auto g = backward(net, cache, Eigen::MatrixXd::Zero(3, 4));
    for (const auto& l : g) {
      CHECK(l.weights.isZero(0.0));
      CHECK(l.biases.isZero(0.0));
    }
  }

  TEST_CASE("masked loss") {
    Eigen::VectorXd t = Eigen::VectorXd::Random(95);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(95);
    CHECK(masked_mse(t, t, ones) == 0.0);
    CHECK(masked_mse(t.array() + 0.1, t, ones) == doctest::Approx(0.01).epsilon(1e-12));
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(95);
    e1[0] = 1.0;
    Eigen::VectorXd p = Eigen::VectorXd::Random(95);
    const double v = masked_mse(p, t, e1);
    CHECK(v == std::pow(p[0] - t[0], 2));
    p.tail(94).setConstant(1e6);
    CHECK(masked_mse(p, t, e1) == v);
    CHECK_THROWS_AS(masked_mse(p, t, Eigen::VectorXd::Zero(95)), ConfigError);

    // Gradient with respect to an off channel is exactly zero.
    const auto lg = masked_mse_batch(p, t, e1);
    CHECK(lg.grad.col(0).tail(94).isZero(0.0));
    CHECK(lg.grad(0, 0) == doctest::Approx(2.0 * (p[0] - t[0])));
  }

  TEST_CASE("LeCun initialisation") {
    DenseLayer l(100, 1000, Activation::Selu);
    Rng rng(77);
    init_lecun(l, rng);
    const double mean = l.weights.mean();
    const double var = (l.weights.array() - mean).square().mean();
    CHECK(var == doctest::Approx(0.01).epsilon(0.2));
    CHECK(l.biases.isZero(0.0));
    DenseLayer l2(100, 1000, Activation::Selu);
    Rng rng2(77);
    init_lecun(l2, rng2);
    CHECK(l.weights == l2.weights);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("global norm clipping") {
    Gradients g(1);
    g[0].weights = Eigen::MatrixXd::Zero(1, 2);
    g[0].weights << 3.0, 4.0;
    g[0].biases = Eigen::VectorXd::Zero(1);
    CHECK(global_norm(g) == 5.0);
    const double s = clip_by_global_norm(g, 1.0);
    CHECK(s == doctest::Approx(0.2));
    CHECK(g[0].weights(0, 0) == doctest::Approx(0.6));
    CHECK(global_norm(g) <= 1.0 + 1e-9);
  }

  TEST_CASE("first step moves each parameter by lr against the gradient sign") {
    DenseLayer l(2, 1, Activation::Linear);
    l.weights << 0.5, -0.5;
    l.biases << 0.25;
    Network net({l});
    Adam opt(net, AdamConfig{});
    Gradients g(1);
    g[0].weights = Eigen::MatrixXd(1, 2);
    g[0].weights << 0.1, -0.1;
    g[0].biases = Eigen::VectorXd::Constant(1, 0.1);
    opt.step(net, g);
    // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
    const double step = 1e-3 * 0.1 / (0.1 + 1e-8);
    CHECK(std::abs(net.layer(0).weights(0, 0) - (0.5 - step)) < 1e-12);
    CHECK(std::abs(net.layer(0).weights(0, 1) - (-0.5 + step)) < 1e-12);
    CHECK(std::abs(net.layer(0).biases[0] - (0.25 - 1e-3)) < 1e-9);
    CHECK(opt.steps() == 1);
  }

  TEST_CASE("zero multiplier leaves a layer untouched") {
    Rng rng(2);
    Network net({DenseLayer(4, 3, Activation::Selu), DenseLayer(3, 2, Activation::Linear)});
    init_lecun(net, rng);
    net.layer(0).lr_multiplier = 0.0;
    const auto before = net.layer(0).weights;
    const auto before_b = net.layer(0).biases;
    Adam opt(net, AdamConfig{});
    Gradients g(2);
    for (std::size_t i = 0; i < 2; ++i) {
      g[i].weights = Eigen::MatrixXd::Ones(net.layer(i).out_dim(), net.layer(i).in_dim());
      g[i].biases = Eigen::VectorXd::Ones(net.layer(i).out_dim());
    }
    for (int k = 0; k < 5; ++k) opt.step(net, g);
    CHECK(net.layer(0).weights == before);
    CHECK(net.layer(0).biases == before_b);
    CHECK(net.layer(1).weights != Eigen::MatrixXd::Zero(2, 3));
  }

  TEST_CASE("non-finite gradients abort training") {
    Network net({DenseLayer(2, 1, Activation::Linear)});
    Adam opt(net, AdamConfig{});
    Gradients g(1);
    g[0].weights = Eigen::MatrixXd::Constant(1, 2, std::nan(""));
    g[0].biases = Eigen::VectorXd::Zero(1);
    CHECK_THROWS_AS(opt.step(net, g), TrainingError);
  }

  TEST_CASE("clipped steps use the rescaled gradient") {
    DenseLayer l(2, 1, Activation::Linear);
    l.weights.setZero();
    l.biases.setZero();
    Network net({l});
    AdamConfig cfg;
    cfg.clip_norm = 1.0;
    Adam opt(net, cfg);
    Gradients g(1);
    g[0].weights = Eigen::MatrixXd(1, 2);
    g[0].weights << 3.0, 4.0;
    g[0].biases = Eigen::VectorXd::Zero(1);
    const auto rep = opt.step(net, g);
    CHECK(rep.grad_norm == doctest::Approx(5.0));
    CHECK(rep.clip_scale == doctest::Approx(0.2));
    CHECK(opt.first_moments()[0].weights(0, 0) == doctest::Approx(0.1 * 0.6));
  }
}
