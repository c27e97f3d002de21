#pragma once

#include "follmer/types.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace follmer::eval {

using Density = std::function<double(double)>;
using Quantile = std::function<double(double)>;

//! Gaussian kernel density estimate with Silverman's bandwidth 1.06 sd n^(-1/5).
class Kde1D {
public:
  explicit Kde1D(std::vector<double> samples);
  Kde1D(std::vector<double> samples, double bandwidth);

  double bandwidth() const { return h_; }
  const std::vector<double>& samples() const { return samples_; }
  double min() const;
  double max() const;

  double operator()(double x) const;
  //! Density at every point of a uniform grid over [lo, hi].
  std::vector<double> evaluate_grid(double lo, double hi, std::size_t points) const;

private:
  std::vector<double> samples_;
  double h_;
};

double silverman_bandwidth(const std::vector<double>& samples);

//! Trapezoid rule for (1/2) |p - q| over a uniform grid of the given size.
double tv_distance(const Density& p, const Density& q, double lo, double hi, std::size_t points);
//! Same, with p and q already tabulated on the grid.
double tv_distance_tabulated(const std::vector<double>& p, const std::vector<double>& q, double lo, double hi);

//! sqrt(mean (a_(i) - b_(i))^2) over sorted samples of equal length.
double w2_1d(std::vector<double> a, std::vector<double> b);
//! sqrt(mean (a_(i) - Q((i - 0.5) / n))^2).
double w2_1d(std::vector<double> a, const Quantile& quantile);

double mean(const std::vector<double>& v);
//! Sample standard deviation with the n - 1 denominator.
double stddev(const std::vector<double>& v);

struct MomentErrors {
  double mse_mean = 0.0;
  double mse_std = 0.0;
};
MomentErrors moment_mse(const std::vector<double>& est_mean, const std::vector<double>& est_std,
                        const std::vector<double>& true_mean, const std::vector<double>& true_std);

//! Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);
double t_cdf(double df, double x);
//! Inverse Student-t CDF by bisection to 1e-8 (in fact to ~1e-10).
double t_quantile(double df, double p);

/// mean +- t_{N*-1, 1 - alpha/2} s sqrt(1 + 1/N*), s the sample standard
/// deviation. Constant samples give a zero-width interval.
Interval prediction_interval(const std::vector<double>& samples, double alpha);

struct IntervalReport {
  std::vector<Interval> intervals;
  std::vector<double> truths;
  std::vector<bool> hits;
  double rate = 0.0;
};

//! Fraction of truths inside their interval, endpoints included.
double coverage(const std::vector<Interval>& intervals, const std::vector<double>& truths);
IntervalReport interval_report(std::vector<Interval> intervals, std::vector<double> truths);

struct MetricRecord {
  std::string metric;
  double value = 0.0;
  double std = 0.0;
  double runtime_s = 0.0;
};

/// Metric records. The CSV holds metric, value, std only so that repeated runs
/// are byte-identical; runtimes appear in the text summary.
struct EvalReport {
  std::vector<MetricRecord> records;

  void add(std::string metric, double value, double std = 0.0, double runtime_s = 0.0);
  const MetricRecord* find(const std::string& metric) const;
  void write_csv(std::ostream& out) const;
  void write_summary(std::ostream& out) const;
};

} // namespace follmer::eval
