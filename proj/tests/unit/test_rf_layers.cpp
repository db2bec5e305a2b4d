#include <doctest.h>

#include <cmath>

#include "../support/gradcheck.hpp"
#include "rismimo/errors.hpp"
#include "rismimo/rf_layers.hpp"

using namespace rismimo;
using namespace rismimo::nn;
using gradcheck::numeric;
using gradcheck::project;
using gradcheck::random_tensor;
using gradcheck::relative_error;

namespace {

Tensor2 random_phases(Eigen::Index b, Eigen::Index k, Rng& rng) {
  Tensor2 t(b, k);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-3.1, 3.1);
  return t;
}

PhaseConfig row_phases(const Tensor2& t, Eigen::Index i) {
  std::vector<double> v(static_cast<std::size_t>(t.cols()));
  for (Eigen::Index k = 0; k < t.cols(); ++k) v[static_cast<std::size_t>(k)] = t(i, k);
  return PhaseConfig(std::move(v));
}

}  // namespace

TEST_CASE("complex stacking layout and round trip") {
  const std::vector<CVector> rows{{{1, 2}, {3, 4}}, {{5, 6}, {7, 8}}};
  const Tensor2 s = stack_complex(rows);
  REQUIRE(s.cols() == 4);
  CHECK(s(0, 0) == 1);
  CHECK(s(0, 1) == 3);
  CHECK(s(0, 2) == 2);
  CHECK(s(0, 3) == 4);
  CHECK(unstack_complex(s) == rows);
  CHECK_THROWS_AS(unstack_complex(Tensor2::Zero(1, 3)), DimensionError);
}

TEST_CASE("power normalization enforces the batch-average power") {
  Rng rng(1);
  const Tensor2 x = random_tensor(32, 8, rng, 3.0);
  CHECK(power_normalize(x, 4.0).rowwise().squaredNorm().mean() == doctest::Approx(16.0).epsilon(1e-12));
  CHECK(power_normalize(x, 4.0, PowerNormalization::sqrt).rowwise().squaredNorm().mean() ==
        doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(power_normalize(Tensor2::Zero(4, 2), 4.0), DomainError);
  CHECK_THROWS_AS(PowerNormalizeLayer(0.0, PowerNormalization::paper), DomainError);
}

TEST_CASE("power normalization gradient") {
  Rng rng(2);
  for (PowerNormalization mode : {PowerNormalization::paper, PowerNormalization::sqrt}) {
    for (int i = 0; i < 10; ++i) {
      Tensor2 x = random_tensor(5, 4, rng);
      const Tensor2 r = random_tensor(5, 4, rng);
      PowerNormalizeLayer layer(4.0, mode);
      layer.forward(x);
      const Tensor2 g = layer.backward(r);
      CHECK(relative_error(g, numeric([&] { return project(power_normalize(x, 4.0, mode), r); }, x)) < 1e-7);
    }
  }
}

TEST_CASE("channel layer output equals the cascaded channel times x") {
  Rng rng(3);
  std::vector<ChannelPair> ch;
  for (int i = 0; i < 6; ++i) ch.push_back(sample_channels(rng, 8, 4, 2));
  const Tensor2 x = random_tensor(6, 8, rng);
  const Tensor2 th = random_phases(6, 8, rng);
  const Tensor2 y = ChannelLayer::apply(x, th, ch, 1.5, 0.0, nullptr);
  const auto xs = unstack_complex(x);
  for (Eigen::Index i = 0; i < 6; ++i) {
    const CVector want = matvec(effective_channel(ch[static_cast<std::size_t>(i)], row_phases(th, i)),
                                xs[static_cast<std::size_t>(i)]);
    CHECK(std::abs(cdouble(y(i, 0), y(i, 2)) - 1.5 * want[0]) < 1e-12);
    CHECK(std::abs(cdouble(y(i, 1), y(i, 3)) - 1.5 * want[1]) < 1e-12);
  }
  CHECK_THROWS_AS(ChannelLayer::apply(x.leftCols(6), th, ch, 1.0, 0.0, nullptr), DimensionError);
  CHECK_THROWS_AS(ChannelLayer().backward(Tensor2::Zero(6, 4)), StateError);
}

TEST_CASE("channel layer gradients with respect to x and theta") {
  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    std::vector<ChannelPair> ch;
    for (int b = 0; b < 3; ++b) ch.push_back(sample_channels(rng, 5, 3, 2));
    Tensor2 x = random_tensor(3, 6, rng);
    Tensor2 th = random_phases(3, 5, rng);
    const Tensor2 r = random_tensor(3, 4, rng);
    ChannelLayer layer;
    layer.forward(x, th, ch, 0.7, 0.0, nullptr);
    const ChannelLayer::Grad g = layer.backward(r);
    auto f = [&] { return project(ChannelLayer::apply(x, th, ch, 0.7, 0.0, nullptr), r); };
    CHECK(relative_error(g.x, numeric(f, x)) < 1e-7);
    CHECK(relative_error(g.theta, numeric(f, th)) < 1e-7);
  }
}

TEST_CASE("cascade layer matches the effective channel and its gradient") {
  Rng rng(5);
  std::vector<ChannelPair> ch;
  for (int b = 0; b < 4; ++b) ch.push_back(sample_channels(rng, 6, 4, 2));
  Tensor2 th = random_phases(4, 6, rng);
  const Tensor2 out = CascadeLayer::apply(th, ch);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const CMatrix a = effective_channel(ch[static_cast<std::size_t>(i)], row_phases(th, i));
    for (std::size_t j = 0; j < a.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      CHECK(std::abs(cdouble(out(i, c), out(i, 8 + c)) - a.entries()[j]) < 1e-12);
    }
  }
  const Tensor2 r = random_tensor(4, 16, rng);
  CascadeLayer layer;
  layer.forward(th, ch);
  CHECK(relative_error(layer.backward(r), numeric([&] { return project(CascadeLayer::apply(th, ch), r); }, th)) <
        1e-7);
}
