#pragma once

#include "follmer/flow.hpp"
#include "follmer/mlp.hpp"
#include "follmer/rng.hpp"
#include "follmer/types.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace follmer::train {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 128;
  std::size_t draws_per_example = 1; // fresh (t, W) pairs per data point per epoch
  double stop_time = 0.99;
  nn::AdamOptions adam;
  std::uint64_t seed = 0;

  void validate() const;
};

//! Called after every epoch with (epoch starting at 1, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

struct VelocityModel {
  nn::Mlp net;
  DataSpec spec;
  double stop_time = 0.99;

  flow::NetworkField field() const { return flow::NetworkField(net); }
};

struct LossTrace {
  std::vector<double> epoch_loss;

  void write_csv(std::ostream& out) const;
};

struct TrainResult {
  VelocityModel model;
  LossTrace trace;
};

//! One summand of the velocity-matching loss:
//!   input  = t x + sqrt(1 - t^2) w,   target = x - t / sqrt(1 - t^2) w.
struct VelocityExample {
  Vector input;
  Vector target;
};
VelocityExample velocity_example(const Vector& x, const Vector& w, double t);

//! Batch over the given data rows with one fresh t ~ U(0, T), W ~ N(0, I) each.
nn::Batch batch_for_rows(const Dataset& data, const std::vector<std::size_t>& rows, RngStream& rng,
                         double stop_time);

//! Batch with independently drawn data indices.
nn::Batch make_batch(const Dataset& data, RngStream& rng, std::size_t batch_size, double stop_time);

/// Minibatch Adam on the empirical velocity-matching loss. Every epoch visits
/// each data index draws_per_example times in shuffled order with fresh
/// (t, W). Throws with the epoch and step on a non-finite loss.
TrainResult train_velocity(const Dataset& data, const TrainConfig& config, const nn::MlpConfig& net_config,
                           const EpochCallback& on_epoch = {});

struct DistillResult {
  nn::Mlp generator;
  double train_rmse = 0.0;
  double holdout_rmse = 0.0;
  std::size_t train_pairs = 0;
  std::size_t holdout_pairs = 0;
  LossTrace trace;
};

/// Fits a one-step generator G(z, y) to (noise, ODE endpoint) pairs.
///
/// conditions has one row (a fixed y) or a pool of rows from which each pair
/// draws its y uniformly. Pairs are split 90/10 into train and holdout with a
/// fixed permutation; RMSE is per coordinate.
DistillResult distill(const flow::VelocityField& field, const FlowConfig& flow, const Matrix& conditions,
                      std::size_t pairs, const nn::MlpConfig& gen_config, const TrainConfig& config,
                      const EpochCallback& on_epoch = {});

//! sqrt of the mean squared coordinate error of G on (z, y) -> target rows.
double generator_rmse(const nn::Mlp& generator, const Matrix& z, const Matrix& y, const Matrix& target);

} // namespace follmer::train
