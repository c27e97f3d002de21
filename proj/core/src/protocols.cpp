#include "follmer/protocols.hpp"

#include <algorithm>
#include <cmath>

namespace follmer::eval {

namespace {

std::vector<double> first_column(const Matrix& m) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = m(i, 0);
  }
  return out;
}

void require_scalar(const flow::VelocityField& field) {
  if (field.x_dim() != 1) {
    throw DimensionError("evaluation protocols need a one-dimensional X");
  }
}

} // namespace

ConditionalSampler ode_sampler(const flow::VelocityField& field, const FlowConfig& flow, std::uint64_t seed,
                               std::uint64_t stream) {
  require_scalar(field);
  const RngStream base(seed, stream);
  return [&field, flow, base](const Vector& y, std::size_t count, std::size_t i) {
    return first_column(flow::sample_batch(field, y, flow, count, base.substream(i)));
  };
}

ConditionalSampler sde_sampler(const flow::VelocityField& field, const FlowConfig& flow, std::uint64_t seed,
                               std::uint64_t stream) {
  require_scalar(field);
  const RngStream base(seed, stream);
  return [&field, flow, base](const Vector& y, std::size_t count, std::size_t i) {
    return first_column(flow::sde_sample(field, y, flow, count, base.substream(i)));
  };
}

TvSummary tv_protocol(const ConditionalSampler& sampler, synth::Shape shape, const std::vector<double>& conditions,
                      std::size_t samples_per, std::size_t grid_points) {
  if (conditions.empty()) {
    throw Error("tv_protocol: no conditions");
  }
  TvSummary s;
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    const double y = conditions[i];
    const Kde1D kde(sampler(Vector::Constant(1, y), samples_per, i));
    const auto slice = synth::shape_slice(shape, y);
    const double h = kde.bandwidth();
    const double lo = std::min(kde.min() - 3.0 * h, slice.support.lo);
    const double hi = std::max(kde.max() + 3.0 * h, slice.support.hi);
    const std::vector<double> est = kde.evaluate_grid(lo, hi, grid_points);
    std::vector<double> truth(grid_points);
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    for (std::size_t k = 0; k < grid_points; ++k) {
      truth[k] = slice.density(lo + static_cast<double>(k) * step);
    }
    s.tv.push_back(tv_distance_tabulated(est, truth, lo, hi));
  }
  s.mean = mean(s.tv);
  s.std = s.tv.size() > 1 ? stddev(s.tv) : 0.0;
  return s;
}

MomentSummary moment_protocol(const ConditionalSampler& sampler, synth::Model model, const Matrix& conditions,
                              std::size_t samples_per) {
  if (conditions.rows() == 0) {
    throw Error("moment_protocol: no conditions");
  }
  MomentSummary s;
  for (Eigen::Index i = 0; i < conditions.rows(); ++i) {
    const Vector y = conditions.row(i).transpose();
    const auto draws = sampler(y, samples_per, static_cast<std::size_t>(i));
    s.est_mean.push_back(mean(draws));
    s.est_std.push_back(stddev(draws));
    s.true_mean.push_back(synth::true_mean(model, y));
    s.true_std.push_back(synth::true_std(model, y));
  }
  s.errors = moment_mse(s.est_mean, s.est_std, s.true_mean, s.true_std);
  return s;
}

IntervalReport interval_protocol(const ConditionalSampler& sampler, const Matrix& conditions,
                                 const std::vector<double>& truths, std::size_t n_star, double alpha) {
  if (static_cast<std::size_t>(conditions.rows()) != truths.size()) {
    throw Error("interval_protocol: conditions and truths differ in length");
  }
  std::vector<Interval> intervals;
  for (Eigen::Index i = 0; i < conditions.rows(); ++i) {
    const auto draws = sampler(conditions.row(i).transpose(), n_star, static_cast<std::size_t>(i));
    intervals.push_back(prediction_interval(draws, alpha));
  }
  return interval_report(std::move(intervals), truths);
}

} // namespace follmer::eval
