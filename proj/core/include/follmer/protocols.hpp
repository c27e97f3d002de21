#pragma once

#include "follmer/eval.hpp"
#include "follmer/flow.hpp"
#include "follmer/synthdata.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace follmer::eval {

//! count draws of the (one-dimensional) X given Y = y for evaluation case i.
using ConditionalSampler = std::function<std::vector<double>(const Vector& y, std::size_t count, std::size_t i)>;

//! ODE sampler; case i starts from the noise of RngStream(seed, stream).substream(i).
ConditionalSampler ode_sampler(const flow::VelocityField& field, const FlowConfig& flow, std::uint64_t seed,
                               std::uint64_t stream);
ConditionalSampler sde_sampler(const flow::VelocityField& field, const FlowConfig& flow, std::uint64_t seed,
                               std::uint64_t stream);

struct TvSummary {
  std::vector<double> tv;
  double mean = 0.0;
  double std = 0.0;
};

/// Per condition: draw samples_per values, fit a Silverman KDE and compute the
/// TV distance to the shape's slice density on a 2048-point grid covering
/// [min - 3h, max + 3h] and the slice support.
TvSummary tv_protocol(const ConditionalSampler& sampler, synth::Shape shape, const std::vector<double>& conditions,
                      std::size_t samples_per = 200, std::size_t grid_points = 2048);

struct MomentSummary {
  std::vector<double> est_mean;
  std::vector<double> est_std;
  std::vector<double> true_mean;
  std::vector<double> true_std;
  MomentErrors errors;
};

//! Sample mean and standard deviation per condition row against the model truth.
MomentSummary moment_protocol(const ConditionalSampler& sampler, synth::Model model, const Matrix& conditions,
                              std::size_t samples_per = 500);

//! Student-t prediction interval from n_star draws per case, scored on truths.
IntervalReport interval_protocol(const ConditionalSampler& sampler, const Matrix& conditions,
                                 const std::vector<double>& truths, std::size_t n_star = 200, double alpha = 0.05);

} // namespace follmer::eval
