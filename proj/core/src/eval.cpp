#include "follmer/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

namespace follmer::eval {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Continued fraction for I_x(a, b), modified Lentz.
double beta_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-12;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) {
      return h;
    }
  }
  throw Error("incomplete_beta: continued fraction did not converge");
}

} // namespace

double silverman_bandwidth(const std::vector<double>& samples) {
  if (samples.size() < 2) {
    throw Error("kde: at least two samples are required");
  }
  const double s = stddev(samples);
  if (!(s > 0.0)) {
    throw Error("kde: samples are constant, bandwidth would be zero");
  }
  return 1.06 * s * std::pow(static_cast<double>(samples.size()), -0.2);
}

Kde1D::Kde1D(std::vector<double> samples) : samples_(std::move(samples)), h_(silverman_bandwidth(samples_)) {}

Kde1D::Kde1D(std::vector<double> samples, double bandwidth) : samples_(std::move(samples)), h_(bandwidth) {
  if (samples_.size() < 2) {
    throw Error("kde: at least two samples are required");
  }
  if (!(h_ > 0.0)) {
    throw Error("kde: bandwidth must be positive");
  }
}

double Kde1D::min() const {
  return *std::min_element(samples_.begin(), samples_.end());
}

double Kde1D::max() const {
  return *std::max_element(samples_.begin(), samples_.end());
}

double Kde1D::operator()(double x) const {
  double sum = 0.0;
  for (double s : samples_) {
    const double z = (x - s) / h_;
    sum += std::exp(-0.5 * z * z);
  }
  return sum * kInvSqrt2Pi / (static_cast<double>(samples_.size()) * h_);
}

std::vector<double> Kde1D::evaluate_grid(double lo, double hi, std::size_t points) const {
  if (points < 2 || !(lo < hi)) {
    throw Error("kde grid: need lo < hi and at least two points");
  }
  std::vector<double> out(points, 0.0);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  const double reach = 9.0 * h_;
  for (double s : samples_) {
    const auto first = static_cast<long>(std::ceil((s - reach - lo) / step));
    const auto last = static_cast<long>(std::floor((s + reach - lo) / step));
    for (long i = std::max(0L, first); i <= std::min(static_cast<long>(points) - 1, last); ++i) {
      const double z = (lo + static_cast<double>(i) * step - s) / h_;
      out[static_cast<std::size_t>(i)] += std::exp(-0.5 * z * z);
    }
  }
  const double scale = kInvSqrt2Pi / (static_cast<double>(samples_.size()) * h_);
  for (auto& v : out) {
    v *= scale;
  }
  return out;
}

double tv_distance_tabulated(const std::vector<double>& p, const std::vector<double>& q, double lo, double hi) {
  if (!(lo < hi)) {
    throw Error("tv_distance: grid requires lo < hi");
  }
  if (p.size() != q.size() || p.size() < 2) {
    throw Error("tv_distance: tabulated densities must share a grid of at least two points");
  }
  const double step = (hi - lo) / static_cast<double>(p.size() - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w = (i == 0 || i + 1 == p.size()) ? 0.5 : 1.0;
    sum += w * std::abs(p[i] - q[i]);
  }
  return 0.5 * sum * step;
}

double tv_distance(const Density& p, const Density& q, double lo, double hi, std::size_t points) {
  if (points < 16) {
    throw Error("tv_distance: at least 16 grid points are required");
  }
  if (!(lo < hi)) {
    throw Error("tv_distance: grid requires lo < hi");
  }
  std::vector<double> pv(points);
  std::vector<double> qv(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + static_cast<double>(i) * step;
    pv[i] = p(x);
    qv[i] = q(x);
  }
  return tv_distance_tabulated(pv, qv, lo, hi);
}

double w2_1d(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) {
    throw Error("w2_1d: empty sample");
  }
  if (a.size() != b.size()) {
    throw Error("w2_1d: two-sample mode needs equal sample sizes");
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

double w2_1d(std::vector<double> a, const Quantile& quantile) {
  if (a.empty()) {
    throw Error("w2_1d: empty sample");
  }
  std::sort(a.begin(), a.end());
  const auto n = static_cast<double>(a.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double q = quantile((static_cast<double>(i) + 0.5) / n);
    sum += (a[i] - q) * (a[i] - q);
  }
  return std::sqrt(sum / n);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) {
    throw Error("mean: empty sample");
  }
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) {
    throw Error("stddev: at least two values are required");
  }
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) {
    ss += (x - m) * (x - m);
  }
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

MomentErrors moment_mse(const std::vector<double>& est_mean, const std::vector<double>& est_std,
                        const std::vector<double>& true_mean, const std::vector<double>& true_std) {
  const std::size_t n = est_mean.size();
  if (n == 0 || est_std.size() != n || true_mean.size() != n || true_std.size() != n) {
    throw Error("moment_mse: estimate and truth lists must be non-empty and aligned");
  }
  MomentErrors e;
  for (std::size_t i = 0; i < n; ++i) {
    e.mse_mean += (est_mean[i] - true_mean[i]) * (est_mean[i] - true_mean[i]);
    e.mse_std += (est_std[i] - true_std[i]) * (est_std[i] - true_std[i]);
  }
  e.mse_mean /= static_cast<double>(n);
  e.mse_std /= static_cast<double>(n);
  return e;
}

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) {
    throw Error("incomplete_beta: a and b must be positive");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error("incomplete_beta: x must lie in [0, 1]");
  }
  if (x == 0.0 || x == 1.0) {
    return x;
  }
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double t_cdf(double df, double x) {
  if (!(df > 0.0)) {
    throw Error("t_cdf: degrees of freedom must be positive");
  }
  if (std::isinf(x)) {
    return x > 0 ? 1.0 : 0.0;
  }
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + x * x));
  return x >= 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double df, double p) {
  if (!(df >= 1.0)) {
    throw Error("t_quantile: degrees of freedom must be at least 1");
  }
  if (!(p > 0.0 && p < 1.0)) {
    throw Error("t_quantile: p must lie in (0, 1)");
  }
  if (p == 0.5) {
    return 0.0;
  }
  if (p < 0.5) {
    return -t_quantile(df, 1.0 - p);
  }
  double lo = 0.0;
  double hi = 1.0;
  while (t_cdf(df, hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) {
      throw Error("t_quantile: quantile out of range");
    }
  }
  for (int it = 0; it < 400 && hi - lo > 1e-10 * std::max(1.0, lo); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (t_cdf(df, mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Interval prediction_interval(const std::vector<double>& samples, double alpha) {
  if (samples.size() < 2) {
    throw Error("prediction_interval: at least two samples are required");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error("prediction_interval: alpha must lie in (0, 1)");
  }
  const double m = mean(samples);
  const double s = stddev(samples);
  const auto n = static_cast<double>(samples.size());
  if (s == 0.0) {
    return {m, m};
  }
  const double half = t_quantile(n - 1.0, 1.0 - 0.5 * alpha) * s * std::sqrt(1.0 + 1.0 / n);
  return {m - half, m + half};
}

double coverage(const std::vector<Interval>& intervals, const std::vector<double>& truths) {
  if (intervals.size() != truths.size()) {
    throw Error("coverage: intervals and truths differ in length");
  }
  if (intervals.empty()) {
    throw Error("coverage: no cases");
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    hits += intervals[i].contains(truths[i]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(intervals.size());
}

IntervalReport interval_report(std::vector<Interval> intervals, std::vector<double> truths) {
  IntervalReport r;
  r.rate = coverage(intervals, truths);
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    r.hits.push_back(intervals[i].contains(truths[i]));
  }
  r.intervals = std::move(intervals);
  r.truths = std::move(truths);
  return r;
}

void EvalReport::add(std::string metric, double value, double std, double runtime_s) {
  records.push_back({std::move(metric), value, std, runtime_s});
}

const MetricRecord* EvalReport::find(const std::string& metric) const {
  for (const auto& r : records) {
    if (r.metric == metric) {
      return &r;
    }
  }
  return nullptr;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "metric,value,std\n";
  for (const auto& r : records) {
    out << r.metric << ',' << fmt(r.value) << ',' << fmt(r.std) << '\n';
  }
}

void EvalReport::write_summary(std::ostream& out) const {
  std::size_t width = 6;
  for (const auto& r : records) {
    width = std::max(width, r.metric.size());
  }
  char buf[160];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof buf, "%-*s  value %.6g  std %.6g  runtime %.3fs\n", static_cast<int>(width),
                  r.metric.c_str(), r.value, r.std, r.runtime_s);
    out << buf;
  }
}

} // namespace follmer::eval
