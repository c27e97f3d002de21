#include "follmer/eval.hpp"
#include "follmer/oracle.hpp"
#include "follmer/rng.hpp"
#include "follmer/synthdata.hpp"

#include "reference.hpp"

#include <boost/math/distributions/normal.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace follmer;
using namespace follmer::eval;

namespace {

double phi(double x) { return std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi); }

Density normal(double mu, double sd = 1.0) {
  return [=](double x) { return phi((x - mu) / sd) / sd; };
}

std::vector<double> normals(std::uint64_t seed, std::size_t n, double mu = 0, double sd = 1) {
  RngStream rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = mu + sd * rng.gaussian();
  return v;
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

} // namespace

TEST(Kde, SilvermanBandwidth) {
  const std::vector<double> s{-1, 1};
  const double sd = std::sqrt(2.0);
  EXPECT_NEAR(silverman_bandwidth(s), 1.06 * sd * std::pow(2.0, -0.2), 1e-15);
  EXPECT_THROW(silverman_bandwidth({1.0, 1.0}), Error);
  EXPECT_THROW(Kde1D(std::vector<double>{1.0}), Error);
}

TEST(Kde, TwoPointDensity) {
  const Kde1D k(std::vector<double>{-1, 1});
  const double h = k.bandwidth();
  EXPECT_NEAR(k(0.0), phi(1 / h) / h, 1e-15);
  for (double a : {0.3, 1.0, 2.7}) EXPECT_NEAR(k(a), k(-a), 1e-15);
}

TEST(Kde, IntegratesToOne) {
  const Kde1D k(normals(3, 300));
  const double lo = k.min() - 6 * k.bandwidth(), hi = k.max() + 6 * k.bandwidth();
  const auto grid = k.evaluate_grid(lo, hi, 4096);
  const double dx = (hi - lo) / 4095;
  double s = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) s += (i == 0 || i + 1 == grid.size() ? 0.5 : 1.0) * grid[i];
  EXPECT_NEAR(s * dx, 1.0, 1e-4);
}

TEST(Kde, GridMatchesPointwise) {
  const Kde1D k(normals(4, 200));
  const auto grid = k.evaluate_grid(-5, 5, 101);
  for (int i = 0; i < 101; i += 10) EXPECT_NEAR(grid[i], k(-5 + 0.1 * i), 1e-12);
}

TEST(Tv, IdenticalIsZero) {
  EXPECT_NEAR(tv_distance(normal(0), normal(0), -8, 8, 1024), 0.0, 1e-15);
}

TEST(Tv, DisjointIsOne) {
  EXPECT_NEAR(tv_distance(normal(0), normal(10), -8, 18, 4096), 1.0, 1e-3);
}

TEST(Tv, ShiftedGaussians) {
  const double exact = 2 * (0.5 * std::erfc(-0.5 / std::sqrt(2.0))) - 1;
  EXPECT_NEAR(exact, 0.3829, 1e-4);
  EXPECT_NEAR(tv_distance(normal(0), normal(1), -8, 9, 4096), exact, 1e-3);
}

TEST(Tv, MetricProperties) {
  RngStream rng(5);
  for (int k = 0; k < 50; ++k) {
    const auto p = normal(rng.uniform(-2, 2), rng.uniform(0.3, 2));
    const auto q = normal(rng.uniform(-2, 2), rng.uniform(0.3, 2));
    const auto r = normal(rng.uniform(-2, 2), rng.uniform(0.3, 2));
    const double pq = tv_distance(p, q, -15, 15, 4096);
    const double qp = tv_distance(q, p, -15, 15, 4096);
    EXPECT_NEAR(pq, qp, 1e-15);
    EXPECT_GE(pq, 0.0);
    EXPECT_LE(pq, 1 + 1e-6);
    EXPECT_LE(pq, tv_distance(p, r, -15, 15, 4096) + tv_distance(r, q, -15, 15, 4096) + 1e-9);
  }
}

TEST(Tv, RejectsBadGrids) {
  EXPECT_THROW(tv_distance(normal(0), normal(0), 1, -1, 100), Error);
  EXPECT_THROW(tv_distance(normal(0), normal(0), -1, 1, 8), Error);
}

TEST(W2, Basics) {
  EXPECT_EQ(w2_1d({1, 2, 3}, {3, 1, 2}), 0.0);
  EXPECT_EQ(w2_1d({0.0}, {1.0}), 1.0);
  EXPECT_THROW(w2_1d({1, 2}, {1}), Error);
  EXPECT_THROW(w2_1d(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST(W2, ZeroOnlyForEqualSortedSamples) {
  EXPECT_GT(w2_1d({1, 2, 3}, {1, 2, 3.001}), 0.0);
}

TEST(W2, ScaleEquivariant) {
  const auto a = normals(6, 500), b = normals(7, 500, 0.3, 1.4);
  for (double c : {-2.0, 0.5, 3.0}) {
    std::vector<double> ca(a), cb(b);
    for (auto& x : ca) x *= c;
    for (auto& x : cb) x *= c;
    EXPECT_NEAR(w2_1d(ca, cb), std::abs(c) * w2_1d(a, b), 1e-12);
  }
}

TEST(W2, ExactQuantilesAtLargeSample) {
  EXPECT_LE(w2_1d(normals(8, 100000), normal_quantile), 0.02);
}

TEST(W2, ShiftIsExact) {
  const auto a = normals(9, 1000);
  std::vector<double> b(a);
  for (auto& x : b) x += 0.75;
  EXPECT_NEAR(w2_1d(a, b), 0.75, 1e-12);
}

TEST(Moments, Mse) {
  const auto z = moment_mse({1, 2}, {0.5, 0.5}, {1, 2}, {0.5, 0.5});
  EXPECT_EQ(z.mse_mean, 0.0);
  EXPECT_EQ(z.mse_std, 0.0);
  const auto e = moment_mse({0.3}, {1.1}, {0.0}, {1.0});
  EXPECT_NEAR(e.mse_mean, 0.09, 1e-15);
  EXPECT_NEAR(e.mse_std, 0.01, 1e-15);
  EXPECT_THROW(moment_mse({}, {}, {}, {}), Error);
}

TEST(Moments, SampleStatistics) {
  EXPECT_DOUBLE_EQ(mean({1, 2, 3, 4}), 2.5);
  EXPECT_DOUBLE_EQ(stddev({1, 2, 3, 4}), std::sqrt(5.0 / 3.0));
}

TEST(Moments, M3OracleSamplesWithinBudget) {
  // 500 draws from the exact conditional law of M3 at fixed y.
  const Vector y = Vector::Constant(1, 1.3);
  RngStream rng(10);
  std::vector<double> xs(500);
  for (auto& x : xs) x = synth::draw_conditional(synth::Model::M3, y, rng);
  const auto e = moment_mse({mean(xs)}, {stddev(xs)}, {0.0}, {synth::true_std(synth::Model::M3, y)});
  EXPECT_LE(e.mse_mean, 0.05);
}

TEST(StudentT, Symmetry) {
  for (double df : {1.0, 3.0, 30.0, 199.0}) {
    EXPECT_EQ(t_quantile(df, 0.5), 0.0);
    for (double p : {0.01, 0.2, 0.4}) {
      EXPECT_NEAR(t_quantile(df, p) + t_quantile(df, 1 - p), 0.0, 1e-8);
    }
  }
}

TEST(StudentT, CauchyQuartile) { EXPECT_NEAR(t_quantile(1, 0.75), 1.0, 1e-9); }

TEST(StudentT, FrozenQuantiles) {
  struct Case {
    double df, p, frozen;
  };
  const Case cases[] = {{199, 0.975, 1.9719565442517538}, {5, 0.9, 1.4758840488244811}, {30, 0.995, 2.7499956535672253}};
  for (const auto& c : cases) {
    EXPECT_NEAR(ref::boost_t_quantile(c.df, c.p), c.frozen, 1e-12);
    EXPECT_NEAR(t_quantile(c.df, c.p), c.frozen, 1e-9);
  }
  EXPECT_NEAR(t_quantile(199, 0.975), 1.9720, 1e-3);
}

TEST(StudentT, CdfInvertsQuantile) {
  for (double df : {2.0, 7.0, 60.0}) {
    for (double p : {0.001, 0.3, 0.9, 0.999}) {
      EXPECT_NEAR(t_cdf(df, t_quantile(df, p)), p, 1e-10);
    }
  }
  EXPECT_THROW(t_quantile(0.5, 0.3), Error);
  EXPECT_THROW(t_quantile(3, 1.0), Error);
}

TEST(StudentT, IncompleteBetaKnownValues) {
  EXPECT_NEAR(incomplete_beta(1, 1, 0.3), 0.3, 1e-14);
  EXPECT_NEAR(incomplete_beta(2, 3, 0.4), 0.5248, 1e-12);
  EXPECT_EQ(incomplete_beta(2, 3, 0.0), 0.0);
  EXPECT_EQ(incomplete_beta(2, 3, 1.0), 1.0);
}

TEST(Intervals, ComposedWidth) {
  const auto iv = prediction_interval({-1, 1}, 0.5);
  const double width = 2 * t_quantile(1, 0.75) * std::sqrt(2.0) * std::sqrt(1.5);
  EXPECT_NEAR(iv.lo, -width / 2, 1e-9);
  EXPECT_NEAR(iv.hi, width / 2, 1e-9);
}

TEST(Intervals, WidthShrinksAsAlphaGrowsToOne) {
  const auto s = normals(11, 50);
  double prev = prediction_interval(s, 0.9).width();
  for (double a : {0.99, 0.999, 0.99999}) {
    const double w = prediction_interval(s, a).width();
    EXPECT_LT(w, prev);
    EXPECT_GT(w, 0.0);
    prev = w;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Intervals, ConstantSamples) {
  const auto iv = prediction_interval({2.5, 2.5, 2.5}, 0.05);
  EXPECT_EQ(iv.lo, 2.5);
  EXPECT_EQ(iv.hi, 2.5);
}

TEST(Coverage, AllAndNone) {
  const std::vector<Interval> iv{{0, 1}, {2, 3}};
  EXPECT_EQ(coverage(iv, {0.5, 3.0}), 1.0);
  EXPECT_EQ(coverage(iv, {-1, 4}), 0.0);
  EXPECT_EQ(coverage(iv, {0.5, 4}), 0.5);
  EXPECT_THROW(coverage(iv, {1.0}), Error);
}

TEST(Coverage, NominalRateOnGaussianTruth) {
  RngStream rng(12);
  std::vector<Interval> iv;
  std::vector<double> truths;
  for (int c = 0; c < 5000; ++c) {
    std::vector<double> s(200);
    for (auto& x : s) x = rng.gaussian();
    iv.push_back(prediction_interval(s, 0.05));
    truths.push_back(rng.gaussian());
  }
  const double cr = coverage(iv, truths);
  EXPECT_GE(cr, 0.93);
  EXPECT_LE(cr, 0.97);
}

TEST(Report, CsvOmitsRuntime) {
  EvalReport r;
  r.add("tv_ode", 0.25, 0.125, 12.5);
  r.add("coverage", 0.5);
  std::ostringstream csv, text;
  r.write_csv(csv);
  EXPECT_EQ(csv.str(), "metric,value,std\ntv_ode,0.25,0.125\ncoverage,0.5,0\n");
  r.write_summary(text);
  EXPECT_NE(text.str().find("runtime"), std::string::npos);
  ASSERT_NE(r.find("coverage"), nullptr);
  EXPECT_EQ(r.find("nothing"), nullptr);
}
