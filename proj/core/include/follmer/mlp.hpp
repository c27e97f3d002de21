#pragma once

#include "follmer/rng.hpp"
#include "follmer/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace follmer::nn {

/// Architecture and constraint constants of a ReLU network
///   v(x, y, t) : R^x_dim x R^cond_dim x R -> R^out_dim.
///
/// Inputs are concatenated as (x, y, time features). The time block is the
/// raw t followed by sin(2^j pi t), cos(2^j pi t) for j < fourier_features;
/// it is absent when time_input is false (one-step generators map (z, y)).
///
/// output_cap (K) is enforced exactly by radial projection of the output,
/// weight_cap (kappa) by clamping after each optimizer step. The Lipschitz
/// constants are recorded for diagnostics only.
struct MlpConfig {
  std::size_t x_dim = 1;
  std::size_t cond_dim = 0;
  bool time_input = true;
  std::size_t fourier_features = 0;
  std::vector<std::size_t> hidden{256, 256, 256, 256};
  std::size_t out_dim = 1;
  std::optional<double> output_cap;
  std::optional<double> weight_cap;
  std::optional<double> lipschitz_x;
  std::optional<double> lipschitz_y;
  std::optional<double> lipschitz_t;

  static MlpConfig velocity(std::size_t dx, std::size_t dy, std::vector<std::size_t> hidden = {256, 256, 256, 256});
  static MlpConfig generator(std::size_t dx, std::size_t dy, std::vector<std::size_t> hidden = {256, 256, 256, 256});

  std::size_t time_width() const;
  std::size_t input_width() const { return x_dim + cond_dim + time_width(); }
  std::size_t depth() const { return hidden.size(); }
  std::size_t max_width() const;
  //! Number of weights and biases.
  std::size_t parameter_count() const;

  void validate() const;
  bool operator==(const MlpConfig&) const = default;
};

struct Layer {
  Matrix weight; // out x in
  RowVector bias;
};

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Layer> m;
  std::vector<Layer> v;
  std::uint64_t step = 0;
};

//! Gradient with the same layout as the network parameters.
struct Gradients {
  std::vector<Layer> layers;
};

/// Training examples for the mean squared loss
///   (1/B) sum_i |target_i - v(x_i, y_i, t_i)|_2^2.
/// For networks without a time input, t is left empty.
struct Batch {
  Matrix x;
  Matrix y;
  Vector t;
  Matrix target;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grad;
};

class Mlp {
public:
  //! All-zero parameters.
  explicit Mlp(MlpConfig config);

  //! He-uniform weights U(-sqrt(6/fan_in), sqrt(6/fan_in)), zero biases.
  static Mlp he_uniform(MlpConfig config, RngStream& rng);

  const MlpConfig& config() const { return config_; }
  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }
  AdamState& adam() { return adam_; }
  const AdamState& adam() const { return adam_; }

  //! Builds the input rows (x, y, time features). y may have one row, which is
  //! broadcast to every row of x.
  Matrix assemble(const Matrix& x, const Matrix& y, const Vector& t) const;

  //! Network output on assembled input rows, after the output-cap projection.
  Matrix forward(const Matrix& inputs) const;
  Matrix forward(const Matrix& x, const Matrix& y, const Vector& t) const;
  Vector forward(const Vector& x, const Vector& y, double t) const;

  //! Flattened parameters in layer order: weight (row-major) then bias.
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& values);

  //! Largest |theta| over all parameters.
  double max_abs_parameter() const;

private:
  friend LossAndGrad loss_and_grad(const Mlp&, const Batch&);

  MlpConfig config_;
  std::vector<Layer> layers_;
  AdamState adam_;
};

//! Mean squared loss and its exact gradient by backpropagation. At the cap
//! boundary r == K the unprojected branch is used.
LossAndGrad loss_and_grad(const Mlp& net, const Batch& batch);

//! Bias-corrected Adam step, then clamp to [-kappa, kappa] when a weight cap
//! is set. Throws on non-finite gradient entries.
void adam_step(Mlp& net, const Gradients& grad, const AdamOptions& opts);

struct LipschitzProbe {
  double x = 0.0; // max |v(x1) - v(x2)|_inf / |x1 - x2|_2
  double y = 0.0;
  double t = 0.0;
};

/// Empirical Lipschitz ratios on random probe pairs (reported, not enforced).
/// x and y are drawn from [-radius, radius], t from [0, stop_time].
LipschitzProbe probe_lipschitz(const Mlp& net, RngStream& rng, std::size_t pairs, double radius, double stop_time,
                               double delta = 1e-3);

} // namespace follmer::nn
