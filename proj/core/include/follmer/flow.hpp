#pragma once

#include "follmer/mlp.hpp"
#include "follmer/rng.hpp"
#include "follmer/types.hpp"

#include <functional>
#include <vector>

namespace follmer::flow {

/// A velocity field v(x, y, t) : R^dx x R^dy x [0, T] -> R^dx.
///
/// evaluate() works on a block of rows: row i of the result is v(x_i, y_i, t).
/// y may hold a single row that applies to every row of x.
class VelocityField {
public:
  virtual ~VelocityField() = default;

  virtual std::size_t x_dim() const = 0;
  virtual std::size_t cond_dim() const = 0;
  virtual Matrix evaluate(const Matrix& x, const Matrix& y, double t) const = 0;

  Vector evaluate(const Vector& x, const Vector& y, double t) const;
};

//! Adapter for closed-form fields given as a per-row function.
class FunctionField final : public VelocityField {
public:
  using Fn = std::function<Vector(const Vector& x, const Vector& y, double t)>;

  FunctionField(std::size_t dx, std::size_t dy, Fn fn) : dx_(dx), dy_(dy), fn_(std::move(fn)) {}

  std::size_t x_dim() const override { return dx_; }
  std::size_t cond_dim() const override { return dy_; }
  using VelocityField::evaluate;
  Matrix evaluate(const Matrix& x, const Matrix& y, double t) const override;

private:
  std::size_t dx_;
  std::size_t dy_;
  Fn fn_;
};

//! Network-backed field; the network's time input must be enabled.
class NetworkField final : public VelocityField {
public:
  explicit NetworkField(const nn::Mlp& net);

  std::size_t x_dim() const override { return net_->config().x_dim; }
  std::size_t cond_dim() const override { return net_->config().cond_dim; }
  using VelocityField::evaluate;
  Matrix evaluate(const Matrix& x, const Matrix& y, double t) const override;

private:
  const nn::Mlp* net_;
};

class NonFiniteVelocity : public Error {
public:
  NonFiniteVelocity(double t, double state_norm);

  double time() const { return time_; }
  double state_norm() const { return state_norm_; }

private:
  double time_;
  double state_norm_;
};

struct SamplePath {
  std::vector<double> times; // t_0 .. t_N
  Matrix states;             // (N + 1) x dx

  Vector endpoint() const { return states.row(states.rows() - 1).transpose(); }
};

//! Forward Euler on the uniform grid: z_{k+1} = z_k + (T/N) v(z_k, y, t_k).
Vector euler_sample(const VelocityField& field, const Vector& y, const FlowConfig& flow, const Vector& z0);

SamplePath euler_path(const VelocityField& field, const Vector& y, const FlowConfig& flow, const Vector& z0);

//! Euler integration of every row of z0; y has one row or one row per z0 row.
Matrix euler_batch(const VelocityField& field, const Matrix& y, const FlowConfig& flow, Matrix z0);

//! Initial noises for a batch: row i is drawn from rng.substream(i).
Matrix initial_noise(const RngStream& rng, std::size_t count, std::size_t dx);

//! count endpoints of the ODE sampler started from N(0, I).
Matrix sample_batch(const VelocityField& field, const Vector& y, const FlowConfig& flow, std::size_t count,
                    const RngStream& rng);

/// Euler-Maruyama for the stochastic sampler with the same marginals as the
/// ODE. Writing s = t v - z for the score, the forward-time SDE
///   dZ = (2 v(Z, y, t) - Z / t) dt + sqrt(2 / t) dB
/// has marginals f_t. The first step from t_0 = 0 is a plain ODE Euler step
/// because the diffusion is singular there. Row i uses rng.substream(i) for its
/// initial noise and then for its increments.
Matrix sde_sample(const VelocityField& field, const Vector& y, const FlowConfig& flow, std::size_t count,
                  const RngStream& rng);

//! Rows G(z_i, y) with z_i from rng.substream(i).
Matrix one_step_generate(const nn::Mlp& generator, const Vector& y, std::size_t count, const RngStream& rng);

} // namespace follmer::flow
