#pragma once

#include "follmer/flow.hpp"
#include "follmer/rng.hpp"
#include "follmer/types.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace follmer::oracle {

struct Atom {
  Vector location;
  double weight = 0.0;
};

//! Finite mixture of point masses: sum_k w_k delta_{u_k}, w_k > 0, sum w_k = 1.
class AtomMixture {
public:
  explicit AtomMixture(std::vector<Atom> atoms);
  static AtomMixture uniform(const std::vector<Vector>& locations);
  static AtomMixture point(const Vector& location);

  std::size_t dim() const { return static_cast<std::size_t>(atoms_.front().location.size()); }
  std::size_t size() const { return atoms_.size(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  Vector mean() const;

private:
  std::vector<Atom> atoms_;
};

/// Conditional law of X given Y = y as an atom mixture per condition.
///
/// With atoms, the interpolant density f_t(.|y) is the Gaussian mixture
/// sum_k w_k N(t u_k, (1 - t^2) I) and every quantity of the flow has a closed
/// form. All mixture weights are computed in log space.
class DiscreteConditionalTarget final : public flow::VelocityField {
public:
  using Resolver = std::function<std::shared_ptr<const AtomMixture>(const Vector& y)>;

  DiscreteConditionalTarget(std::size_t dx, std::size_t dy, Resolver resolver);

  //! Same mixture for every y (dy may be zero).
  static DiscreteConditionalTarget unconditional(AtomMixture mixture, std::size_t dy = 0);
  //! y resolves to the entry with the nearest key in Euclidean distance.
  static DiscreteConditionalTarget keyed(std::size_t dy, std::vector<std::pair<Vector, AtomMixture>> entries);

  std::size_t x_dim() const override { return dx_; }
  std::size_t cond_dim() const override { return dy_; }
  using VelocityField::evaluate;
  Matrix evaluate(const Matrix& x, const Matrix& y, double t) const override;

  std::shared_ptr<const AtomMixture> mixture(const Vector& y) const;

private:
  std::size_t dx_;
  std::size_t dy_;
  Resolver resolver_;
};

//! E[X | W_t = x] for X ~ mixture; softmax over log w_k - |x - t u_k|^2 / (2 (1 - t^2)).
Vector posterior_mean(const AtomMixture& mixture, const Vector& x, double t);
Vector posterior_mean(const DiscreteConditionalTarget& target, const Vector& x, const Vector& y, double t);

//! v(x, y, t) = (E[X | W_t = x, Y = y] - t x) / (1 - t^2); equals E[X | Y = y] at t = 0.
Vector oracle_velocity(const AtomMixture& mixture, const Vector& x, double t);
Vector oracle_velocity(const DiscreteConditionalTarget& target, const Vector& x, const Vector& y, double t);

double log_interpolant_density(const AtomMixture& mixture, const Vector& x, double t);
double interpolant_density(const AtomMixture& mixture, const Vector& x, double t);
double interpolant_density(const DiscreteConditionalTarget& target, const Vector& x, const Vector& y, double t);

//! s = t v - x, the score of f_t recovered from the velocity; t in (0, 1).
Vector score_from_velocity(const Vector& x, double t, const Vector& velocity);

//! Quantile of a one-dimensional atom mixture: smallest u with F(u) >= p.
double atom_quantile(const AtomMixture& mixture, double p);
double interpolant_cdf(const AtomMixture& mixture, double x, double t);
//! Quantile of f_t for a one-dimensional mixture, by bisection to 1e-10.
double interpolant_quantile(const AtomMixture& mixture, double t, double p);

/// X | Y = y ~ N(mean(y), sigma^2 I). Then W_t | y ~ N(t mean, D I) with
/// D = t^2 sigma^2 + 1 - t^2 and the velocity is (mean + t (sigma^2 - 1) x) / D,
/// which is the constant mean when sigma = 1.
class GaussianTarget final : public flow::VelocityField {
public:
  using MeanFn = std::function<Vector(const Vector& y)>;

  GaussianTarget(std::size_t dx, std::size_t dy, MeanFn mean, double sigma);
  static GaussianTarget constant(const Vector& mean, double sigma, std::size_t dy = 0);

  std::size_t x_dim() const override { return dx_; }
  std::size_t cond_dim() const override { return dy_; }
  using VelocityField::evaluate;
  Matrix evaluate(const Matrix& x, const Matrix& y, double t) const override;

  Vector mean(const Vector& y) const { return mean_(y); }
  double sigma() const { return sigma_; }

private:
  std::size_t dx_;
  std::size_t dy_;
  MeanFn mean_;
  double sigma_;
};

/// Text format, one condition block per key:
///
///   dx = 1
///   dy = 1
///   [condition]
///   y = 0.5
///   atom = 0.5 : -1
///   atom = 0.5 : 1
///
/// "atom = w : u_1 ... u_dx". Blank lines and '#' comments are ignored. With
/// dy = 0 a single block without a y line is expected.
DiscreteConditionalTarget parse_target(std::istream& in);
DiscreteConditionalTarget load_target(const std::string& path);

struct SelfConsistencyReport {
  std::size_t probes = 0;
  double max_score_rel_error = 0.0; // velocity route vs finite-difference score
  double limit_error = 0.0;         // |v(x, y, 1e-6) - E[X | Y = y]|_2, max over probes
  double max_lipschitz_ratio = 0.0; // finite-difference |dv|_2 / |dx|_2 for t <= T
  double lipschitz_bound = 0.0;     // dx / (1 - T)^2
};

/// Checks the closed-form velocity against an independent route through the
/// density: score by central differences of log f_t, the t -> 0 limit, and
/// the x-Lipschitz bound. Probe times are uniform in [0.05, 0.95] for the
/// score check and in [0, T] for the Lipschitz check; probe points uniform in
/// [-radius, radius]^dx. Relative errors use max(1, |reference|) as scale.
SelfConsistencyReport self_consistency(const DiscreteConditionalTarget& target, const Vector& y, double stop_time,
                                       std::size_t probes, RngStream& rng, double radius = 3.0);

} // namespace follmer::oracle
