#include "follmer/mlp.hpp"

#include "reference.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace follmer;
using namespace follmer::nn;

namespace {

Batch single(double x, double target) {
  Batch b;
  b.x = Matrix::Constant(1, 1, x);
  b.y = Matrix(1, 0);
  b.target = Matrix::Constant(1, 1, target);
  return b;
}

MlpConfig linear_1d() {
  MlpConfig c;
  c.time_input = false;
  c.hidden.clear();
  return c;
}

} // namespace

TEST(MlpConfig, ParameterCount) {
  MlpConfig c = MlpConfig::velocity(2, 3, {4, 5});
  // input 2 + 3 + 1
  EXPECT_EQ(c.input_width(), 6u);
  EXPECT_EQ(c.parameter_count(), 4u * 7 + 5 * 5 + 2 * 6);
  c.fourier_features = 2;
  EXPECT_EQ(c.input_width(), 10u);
}

TEST(MlpConfig, RejectsInvalid) {
  MlpConfig c;
  c.hidden = {0};
  EXPECT_THROW(c.validate(), Error);
  c = MlpConfig{};
  c.output_cap = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = MlpConfig::generator(1, 1, {4});
  c.fourier_features = 1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Mlp, ZeroParametersGiveZero) {
  Mlp net(MlpConfig::velocity(3, 2, {8, 8}));
  Vector x(3), y(2);
  x << 1, -2, 3;
  y << 0.5, 4;
  EXPECT_EQ(net.forward(x, y, 0.3), Vector::Zero(3));
}

TEST(Mlp, IdentityLinearLayer) {
  MlpConfig c = MlpConfig::velocity(2, 1, {});
  Mlp net(c);
  net.layers()[0].weight.setZero();
  net.layers()[0].weight(0, 0) = 1;
  net.layers()[0].weight(1, 1) = 1;
  Vector x(2), y(1);
  x << 0.25, -7;
  y << 3;
  EXPECT_EQ(net.forward(x, y, 0.9), x);
}

TEST(Mlp, OutputCapProjectsExactly) {
  MlpConfig c = MlpConfig::velocity(2, 0, {});
  c.output_cap = 3.0;
  Mlp net(c);
  // raw output (12 cos a, 12 sin a) from the bias
  net.layers()[0].bias << 12 * 0.6, 12 * 0.8;
  const Vector out = net.forward(Vector::Zero(2), Vector(), 0.5);
  EXPECT_DOUBLE_EQ(out.norm(), 3.0);
  EXPECT_NEAR(out(0), 1.8, 1e-15);
  EXPECT_NEAR(out(1), 2.4, 1e-15);
}

TEST(Mlp, OutputCapHoldsOnProbes) {
  RngStream rng(3);
  MlpConfig c = MlpConfig::velocity(2, 1, {16, 16});
  c.output_cap = 0.5;
  const Mlp net = Mlp::he_uniform(c, rng);
  const Matrix x = 10 * gauss_matrix(rng, 500, 2);
  const Matrix y = gauss_matrix(rng, 500, 1);
  Vector t(500);
  for (auto& v : t) v = rng.uniform();
  const Matrix out = net.forward(x, y, t);
  EXPECT_LE(out.rowwise().norm().maxCoeff(), 0.5 * (1 + 1e-15));
}

TEST(Mlp, BatchForwardMatchesRowForward) {
  RngStream rng(5);
  MlpConfig c = MlpConfig::velocity(2, 2, {8, 8});
  c.fourier_features = 2;
  const Mlp net = Mlp::he_uniform(c, rng);
  const Matrix x = gauss_matrix(rng, 6, 2);
  const Matrix y = gauss_matrix(rng, 6, 2);
  Vector t = Vector::LinSpaced(6, 0.0, 0.99);
  const Matrix out = net.forward(x, y, t);
  for (int i = 0; i < 6; ++i) {
    const Vector r = net.forward(Vector(x.row(i).transpose()), Vector(y.row(i).transpose()), t(i));
    EXPECT_LE((r - out.row(i).transpose()).norm(), 1e-14);
  }
}

TEST(Mlp, MatchesReferenceEvaluation) {
  RngStream rng(6);
  for (int k = 0; k < 20; ++k) {
    auto rc = ref::random_case(rng);
    const Matrix out = rc.net.forward(rc.batch.x, rc.batch.y, rc.batch.t);
    const auto ref = ref::reference_eval(rc.net.config(), rc.net.flatten(), rc.batch);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      EXPECT_NEAR(out(i / out.cols(), i % out.cols()), static_cast<double>(ref.outputs[static_cast<std::size_t>(i)]),
                  1e-12);
    }
  }
}

TEST(Mlp, ForwardIsPure) {
  RngStream rng(8);
  const Mlp net = Mlp::he_uniform(MlpConfig::velocity(1, 1, {8}), rng);
  const auto before = net.flatten();
  Vector x(1), y(1);
  x << 0.3;
  y << -1;
  const Vector a = net.forward(x, y, 0.2);
  const Vector b = net.forward(x, y, 0.2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(before, net.flatten());
}

TEST(Mlp, BroadcastsSingleConditionRow) {
  RngStream rng(9);
  const Mlp net = Mlp::he_uniform(MlpConfig::velocity(1, 2, {8}), rng);
  const Matrix x = gauss_matrix(rng, 4, 1);
  Matrix y(1, 2);
  y << 0.1, 0.2;
  const Vector t = Vector::Constant(4, 0.5);
  const Matrix full = y.replicate(4, 1);
  EXPECT_EQ(net.forward(x, y, t), net.forward(x, full, t));
  EXPECT_THROW(net.forward(x, Matrix::Zero(3, 2), t), DimensionError);
  EXPECT_THROW(net.forward(x, y, Vector::Zero(3)), DimensionError);
}

TEST(Mlp, FlattenRoundTrip) {
  RngStream rng(10);
  Mlp net = Mlp::he_uniform(MlpConfig::velocity(2, 1, {5, 3}), rng);
  const auto p = net.flatten();
  EXPECT_EQ(p.size(), net.config().parameter_count());
  Mlp other(net.config());
  other.unflatten(p);
  EXPECT_EQ(other.flatten(), p);
  EXPECT_THROW(other.unflatten(std::vector<double>(3)), DimensionError);
}

TEST(Mlp, HeUniformBounds) {
  RngStream rng(12);
  const Mlp net = Mlp::he_uniform(MlpConfig::velocity(1, 0, {64, 64}), rng);
  for (const auto& l : net.layers()) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.weight.cols()));
    EXPECT_LE(l.weight.cwiseAbs().maxCoeff(), bound);
    EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(LossAndGrad, PerfectFitIsZero) {
  RngStream rng(13);
  const Mlp net = Mlp::he_uniform(MlpConfig::velocity(2, 1, {8}), rng);
  Batch b;
  b.x = gauss_matrix(rng, 5, 2);
  b.y = gauss_matrix(rng, 5, 1);
  b.t = Vector::Constant(5, 0.4);
  b.target = net.forward(b.x, b.y, b.t);
  const auto lg = loss_and_grad(net, b);
  EXPECT_EQ(lg.loss, 0.0);
  for (const auto& l : lg.grad.layers) {
    EXPECT_EQ(l.weight.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(l.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(LossAndGrad, HandComputedScalar) {
  Mlp net(linear_1d());
  net.layers()[0].weight(0, 0) = 1.0;
  const auto lg = loss_and_grad(net, single(1.0, 3.0));
  EXPECT_DOUBLE_EQ(lg.loss, 4.0);
  EXPECT_DOUBLE_EQ(lg.grad.layers[0].weight(0, 0), -4.0);
  EXPECT_DOUBLE_EQ(lg.grad.layers[0].bias(0), -4.0);
}

TEST(LossAndGrad, MatchesFiniteDifferencesOnRandomCases) {
  RngStream rng(14);
  std::size_t checked = 0;
  for (int k = 0; k < 100; ++k) {
    auto rc = ref::random_case(rng);
    const auto gc = ref::gradient_check(rc.net, rc.batch);
    EXPECT_LE(gc.max_rel_error, 1e-4) << "case " << k;
    checked += gc.checked;
  }
  EXPECT_GT(checked, 1000u);
}

TEST(LossAndGrad, RejectsEmptyAndMismatched) {
  Mlp net(linear_1d());
  Batch b = single(1, 1);
  b.x.resize(0, 1);
  b.y.resize(0, 0);
  b.target.resize(0, 1);
  EXPECT_THROW(loss_and_grad(net, b), Error);
  b = single(1, 1);
  b.target = Matrix::Zero(2, 1);
  EXPECT_THROW(loss_and_grad(net, b), DimensionError);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  RngStream rng(15);
  Mlp net = Mlp::he_uniform(MlpConfig::velocity(1, 1, {4}), rng);
  const auto before = net.flatten();
  Gradients g;
  for (const auto& l : net.layers()) {
    g.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), RowVector::Zero(l.bias.size())});
  }
  adam_step(net, g, {});
  EXPECT_EQ(net.flatten(), before);
}

TEST(Adam, FirstStepIsMinusLearningRate) {
  Mlp net(linear_1d());
  Gradients g{{{Matrix::Constant(1, 1, 1.0), RowVector::Constant(1, -2.0)}}};
  AdamOptions o;
  o.lr = 0.1;
  adam_step(net, g, o);
  EXPECT_NEAR(net.layers()[0].weight(0, 0), -0.1, 1e-8);
  EXPECT_NEAR(net.layers()[0].bias(0), 0.1, 1e-8);
  EXPECT_EQ(net.adam().step, 1u);
}

TEST(Adam, WeightCapClamps) {
  MlpConfig c = linear_1d();
  c.weight_cap = 0.5;
  Mlp net(c);
  net.layers()[0].weight(0, 0) = 0.65;
  Gradients g{{{Matrix::Constant(1, 1, -1.0), RowVector::Constant(1, 0.0)}}};
  AdamOptions o;
  o.lr = 0.05; // would move to 0.7
  adam_step(net, g, o);
  EXPECT_EQ(net.layers()[0].weight(0, 0), 0.5);
  EXPECT_LE(net.max_abs_parameter(), 0.5);
}

TEST(Adam, CapHoldsDuringTraining) {
  RngStream rng(16);
  MlpConfig c = MlpConfig::velocity(1, 0, {8});
  c.weight_cap = 0.3;
  c.output_cap = 0.7;
  Mlp net = Mlp::he_uniform(c, rng);
  AdamOptions o;
  o.lr = 0.05;
  for (int step = 0; step < 50; ++step) {
    Batch b;
    b.x = gauss_matrix(rng, 16, 1);
    b.y = Matrix(16, 0);
    b.t = Vector::Constant(16, 0.5);
    b.target = 5 * b.x;
    adam_step(net, loss_and_grad(net, b).grad, o);
    ASSERT_LE(net.max_abs_parameter(), 0.3);
    ASSERT_LE(net.forward(b.x, b.y, b.t).rowwise().norm().maxCoeff(), 0.7 * (1 + 1e-15));
  }
}

TEST(Adam, RejectsNonFiniteGradient) {
  Mlp net(linear_1d());
  Gradients g{{{Matrix::Constant(1, 1, std::nan("")), RowVector::Constant(1, 0.0)}}};
  EXPECT_THROW(adam_step(net, g, {}), Error);
}

TEST(Lipschitz, LinearNetworkRatios) {
  MlpConfig c = MlpConfig::velocity(1, 1, {});
  Mlp net(c);
  net.layers()[0].weight << 2.0, -3.0, 0.5;
  RngStream rng(17);
  const auto p = probe_lipschitz(net, rng, 50, 2.0, 0.9);
  EXPECT_NEAR(p.x, 2.0, 1e-9);
  EXPECT_NEAR(p.y, 3.0, 1e-9);
  EXPECT_NEAR(p.t, 0.5, 1e-9);
}
