#include <doctest.h>

#include <cmath>

#include "../support/gradcheck.hpp"
#include "rismimo/errors.hpp"
#include "rismimo/neuralnet.hpp"

using namespace rismimo;
using namespace rismimo::nn;
using gradcheck::numeric;
using gradcheck::project;
using gradcheck::random_tensor;
using gradcheck::relative_error;

TEST_CASE("dense layer forward is x W^T + b") {
  DenseLayer d(2, 1);
  d.weights() << 2.0, -1.0;
  d.bias() << 0.5;
  Tensor2 x(1, 2);
  x << 3.0, 4.0;
  CHECK(d.infer(x)(0, 0) == doctest::Approx(2.5));
  CHECK_THROWS_AS((void)d.infer(Tensor2::Zero(1, 3)), DimensionError);
  CHECK_THROWS_AS(DenseLayer(2, 2).backward(Tensor2::Zero(1, 2)), StateError);
}

TEST_CASE("dense layer gradients") {
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    DenseLayer d = DenseLayer::he(5, 3, rng);
    Tensor2 x = random_tensor(4, 5, rng);
    const Tensor2 r = random_tensor(4, 3, rng);
    d.forward(x);
    const Tensor2 gx = d.backward(r);
    auto f = [&] { return project(d.infer(x), r); };
    CHECK(relative_error(gx, numeric(f, x)) < 1e-7);
    CHECK(relative_error(d.grad_weights(), numeric(f, d.weights())) < 1e-7);
    Tensor2 b = d.bias();
    auto fb = [&] {
      d.bias() = b.row(0);
      return project(d.infer(x), r);
    };
    CHECK(relative_error(d.grad_bias(), numeric(fb, b)) < 1e-7);
  }
}

TEST_CASE("batch norm normalizes in training mode") {
  Rng rng(2);
  BatchNormLayer bn(3);
  const Tensor2 x = random_tensor(50, 3, rng, 4.0).array() + 7.0;
  const Tensor2 y = bn.forward(x, Mode::training);
  for (Eigen::Index c = 0; c < 3; ++c) {
    CHECK(y.col(c).mean() == doctest::Approx(0.0).epsilon(1e-12));
    const double var = (y.col(c).array() - y.col(c).mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-4));
  }
  // running stats moved by momentum 0.1 toward the batch statistics
  CHECK(bn.running_mean()[0] == doctest::Approx(0.1 * x.col(0).mean()));
  CHECK_THROWS_AS(bn.forward(Tensor2::Zero(1, 3), Mode::training), DomainError);
}

TEST_CASE("batch norm gradients in both modes") {
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    BatchNormLayer bn(4);
    bn.gamma() = random_tensor(1, 4, rng).row(0);
    bn.beta() = random_tensor(1, 4, rng).row(0);
    Tensor2 x = random_tensor(6, 4, rng, 2.0);
    const Tensor2 r = random_tensor(6, 4, rng);
    for (Mode mode : {Mode::training, Mode::inference}) {
      bn.forward(x, mode);
      const Tensor2 gx = bn.backward(r);
      const BatchNormLayer frozen = bn;  // numeric pass must not see drifting running stats
      auto g = [&] {
        BatchNormLayer t = frozen;
        return project(t.forward(x, mode), r);
      };
      CHECK(relative_error(gx, numeric(g, x)) < 1e-6);
    }
  }
}

TEST_CASE("relu and sigmoid gradients") {
  Rng rng(4);
  Tensor2 x = random_tensor(5, 6, rng);
  gradcheck::avoid_kink(x, 1e-3);
  const Tensor2 r = random_tensor(5, 6, rng);
  ReluLayer relu_layer;
  relu_layer.forward(x);
  CHECK(relative_error(relu_layer.backward(r), numeric([&] { return project(relu(x), r); }, x)) < 1e-8);
  SigmoidLayer sig;
  sig.forward(x);
  CHECK(relative_error(sig.backward(r), numeric([&] { return project(sigmoid(x), r); }, x)) < 1e-8);
  CHECK(sigmoid(Tensor2::Zero(1, 1))(0, 0) == 0.5);
}

TEST_CASE("softmax cross-entropy value and gradient") {
  Tensor2 logits = Tensor2::Zero(2, 2);
  const std::vector<std::uint32_t> t{0, 1};
  CHECK(softmax_cross_entropy(logits, t).loss == doctest::Approx(std::log(2.0)));

  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    Tensor2 z = random_tensor(7, 4, rng, 3.0);
    std::vector<std::uint32_t> y(7);
    for (auto& v : y) v = static_cast<std::uint32_t>(rng.below(4));
    const LossAndGrad lg = softmax_cross_entropy(z, y);
    CHECK(relative_error(lg.grad, numeric([&] { return softmax_cross_entropy(z, y).loss; }, z)) < 1e-7);
  }
  // stable for huge logits
  Tensor2 big(1, 2);
  big << 1000.0, -1000.0;
  CHECK(std::isfinite(softmax_cross_entropy(big, std::vector<std::uint32_t>{1}).loss));
  CHECK_THROWS_AS(softmax_cross_entropy(big, std::vector<std::uint32_t>{2}), DomainError);
  Tensor2 bad(1, 2);
  bad << 0.5, 0.5;
  CHECK_THROWS_AS(softmax_cross_entropy(big, bad), DomainError);
}

TEST_CASE("adam step matches a hand-computed update") {
  std::vector<double> w{1.0};
  std::vector<double> g{0.5};
  std::vector<ParamView> params{{w, g}};
  AdamState s;
  s.config.lr = 0.1;
  adam_step(s, params);
  // first step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps)
  CHECK(w[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)));
  g[0] = -1.0;
  adam_step(s, params);
  const double m = (0.9 * 0.05 + 0.1 * -1.0) / (1 - 0.81);
  const double v = (0.999 * 0.001 * 0.25 + 0.001 * 1.0) / (1 - 0.999 * 0.999);
  CHECK(w[0] == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8) - 0.1 * m / (std::sqrt(v) + 1e-8)));
}

TEST_CASE("adam drives a quadratic toward its minimum") {
  std::vector<double> w{3.0, -2.0};
  std::vector<double> g(2);
  std::vector<ParamView> params{{w, g}};
  AdamState s;
  s.config.lr = 0.05;
  for (int i = 0; i < 2000; ++i) {
    g[0] = 2 * w[0];
    g[1] = 2 * w[1];
    adam_step(s, params);
  }
  CHECK(std::abs(w[0]) < 1e-2);
  CHECK(std::abs(w[1]) < 1e-2);
}

TEST_CASE("mlp chains layers and reports widths") {
  Rng rng(6);
  Mlp net({DenseLayer::he(3, 8, rng), BatchNormLayer(8), ReluLayer{}, DenseLayer::glorot(8, 2, rng), SigmoidLayer{}});
  CHECK(net.dense_widths() == std::vector<std::size_t>{8, 2});
  CHECK(net.parameter_count() == 3 * 8 + 8 + 16 + 8 * 2 + 2);
  Tensor2 x = random_tensor(5, 3, rng);
  const Tensor2 r = random_tensor(5, 2, rng);
  net.forward(x);
  const Tensor2 gx = net.backward(r);
  const Mlp frozen = net;
  auto f = [&] {
    Mlp t = frozen;
    return project(t.forward(x), r);
  };
  CHECK(relative_error(gx, numeric(f, x)) < 1e-6);
  net.set_mode(Mode::inference);
  CHECK((net.forward(x) - net.infer(x)).norm() < 1e-12);
}
