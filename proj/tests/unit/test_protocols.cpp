#include "follmer/oracle.hpp"
#include "follmer/protocols.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace follmer;
using namespace follmer::eval;

namespace {

// Exact draws of X | Y = y on the checkerboard.
ConditionalSampler checkerboard_truth(std::uint64_t seed) {
  return [seed](const Vector& y, std::size_t count, std::size_t i) {
    RngStream rng = RngStream(seed).substream(i);
    const int row = static_cast<int>(std::floor(y(0) + 2));
    std::vector<double> out(count);
    for (auto& x : out) {
      const int cell = row % 2 + 2 * static_cast<int>(rng.below(2));
      x = -2 + cell + rng.uniform();
    }
    return out;
  };
}

ConditionalSampler standard_normal(std::uint64_t seed) {
  return [seed](const Vector&, std::size_t count, std::size_t i) {
    RngStream rng = RngStream(seed).substream(i);
    std::vector<double> out(count);
    for (auto& x : out) x = rng.gaussian();
    return out;
  };
}

ConditionalSampler regression_truth(synth::Model model, std::uint64_t seed) {
  return [=](const Vector& y, std::size_t count, std::size_t i) {
    RngStream rng = RngStream(seed).substream(i);
    std::vector<double> out(count);
    for (auto& x : out) x = synth::draw_conditional(model, y, rng);
    return out;
  };
}

std::vector<double> checkerboard_conditions(std::size_t n) {
  const auto d = synth::gen_shape({synth::Shape::checkerboard, n, 77});
  return std::vector<double>(d.ys.data(), d.ys.data() + d.ys.rows());
}

} // namespace

TEST(TvProtocol, PerfectSamplerBeatsMismatchedOne) {
  const auto ys = checkerboard_conditions(100);
  const auto good = tv_protocol(checkerboard_truth(1), synth::Shape::checkerboard, ys);
  const auto bad = tv_protocol(standard_normal(1), synth::Shape::checkerboard, ys);
  ASSERT_EQ(good.tv.size(), 100u);
  EXPECT_LT(good.mean, 0.4);
  EXPECT_GT(bad.mean, good.mean + 0.2);
  for (double v : good.tv) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0 + 1e-6);
  }
}

TEST(TvProtocol, Deterministic) {
  const auto ys = checkerboard_conditions(10);
  const auto a = tv_protocol(checkerboard_truth(2), synth::Shape::checkerboard, ys);
  const auto b = tv_protocol(checkerboard_truth(2), synth::Shape::checkerboard, ys);
  EXPECT_EQ(a.tv, b.tv);
}

TEST(MomentProtocol, ExactSamplerHasSmallErrors) {
  RngStream rng(3);
  Matrix conditions(200, 1);
  for (Eigen::Index i = 0; i < 200; ++i) conditions(i, 0) = rng.gaussian();
  const auto r = moment_protocol(regression_truth(synth::Model::M3, 4), synth::Model::M3, conditions, 500);
  EXPECT_EQ(r.est_mean.size(), 200u);
  EXPECT_LE(r.errors.mse_mean, 0.01);
  EXPECT_LE(r.errors.mse_std, 0.005);
}

TEST(IntervalProtocol, ExactSamplerIsNearNominal) {
  RngStream rng(5);
  const std::size_t n = 2000;
  Matrix conditions(n, 5);
  std::vector<double> truths;
  for (std::size_t i = 0; i < n; ++i) {
    const Vector y = synth::draw_condition(synth::Model::M1, rng);
    conditions.row(static_cast<Eigen::Index>(i)) = y.transpose();
    truths.push_back(synth::draw_conditional(synth::Model::M1, y, rng));
  }
  const auto r = interval_protocol(regression_truth(synth::Model::M1, 6), conditions, truths, 200, 0.05);
  EXPECT_GE(r.rate, 0.93);
  EXPECT_LE(r.rate, 0.97);
}

TEST(Samplers, OdeSamplerUsesSubstreams) {
  const auto target = oracle::DiscreteConditionalTarget::unconditional(
      oracle::AtomMixture::uniform({Vector::Constant(1, -1.0), Vector::Constant(1, 1.0)}));
  const FlowConfig fc(0.9, 30);
  const auto s = ode_sampler(target, fc, 9, 2);
  const auto a = s(Vector(), 40, 3);
  const Matrix b = flow::sample_batch(target, Vector(), fc, 40, RngStream(9, 2).substream(3));
  ASSERT_EQ(a.size(), 40u);
  for (int i = 0; i < 40; ++i) EXPECT_EQ(a[i], b(i, 0));
  EXPECT_NE(s(Vector(), 5, 4), s(Vector(), 5, 3));
}

TEST(Samplers, SdeSamplerDeterministic) {
  const auto target = oracle::GaussianTarget::constant(Vector::Constant(1, 0.5), 0.5);
  const auto s = sde_sampler(target, FlowConfig(0.9, 30), 9, 2);
  EXPECT_EQ(s(Vector(), 20, 1), s(Vector(), 20, 1));
}

TEST(Samplers, RequireOneDimensionalX) {
  const auto target = oracle::GaussianTarget::constant(Vector::Zero(2), 1.0);
  EXPECT_THROW(ode_sampler(target, FlowConfig(0.9, 4), 1, 0), Error);
}
