#include "reference.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/multiprecision/cpp_dec_float.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace follmer::ref {

ReferenceEval reference_eval(const nn::MlpConfig& c, const std::vector<double>& params, const nn::Batch& batch) {
  ReferenceEval r;
  const std::size_t n = batch.size();
  std::vector<std::size_t> widths = c.hidden;
  widths.push_back(c.out_dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<long double> in;
    for (std::size_t j = 0; j < c.x_dim; ++j) in.push_back(batch.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    const Eigen::Index yrow = batch.y.rows() == 1 ? 0 : static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < c.cond_dim; ++j) in.push_back(batch.y(yrow, static_cast<Eigen::Index>(j)));
    if (c.time_input) {
      const long double t = batch.t[static_cast<Eigen::Index>(i)];
      in.push_back(t);
      for (std::size_t j = 0; j < c.fourier_features; ++j) {
        const long double f = std::numbers::pi_v<long double> * static_cast<long double>(1u << j);
        in.push_back(std::sin(f * t));
        in.push_back(std::cos(f * t));
      }
    }
    std::size_t pos = 0;
    for (std::size_t l = 0; l < widths.size(); ++l) {
      const std::size_t fan_in = in.size();
      std::vector<long double> out(widths[l], 0.0L);
      for (std::size_t o = 0; o < widths[l]; ++o) {
        long double s = 0;
        for (std::size_t k = 0; k < fan_in; ++k) s += static_cast<long double>(params[pos + o * fan_in + k]) * in[k];
        out[o] = s;
      }
      pos += widths[l] * fan_in;
      for (std::size_t o = 0; o < widths[l]; ++o) out[o] += params[pos + o];
      pos += widths[l];
      if (l + 1 < widths.size()) {
        for (auto& v : out) {
          r.pattern += v > 0 ? '+' : '-';
          v = std::max(v, 0.0L);
        }
      }
      in = std::move(out);
    }
    if (c.output_cap) {
      long double norm = 0;
      for (auto v : in) norm += v * v;
      norm = std::sqrt(norm);
      const bool active = norm > static_cast<long double>(*c.output_cap);
      r.pattern += active ? 'K' : 'k';
      if (active) {
        for (auto& v : in) v *= static_cast<long double>(*c.output_cap) / norm;
      }
    }
    for (std::size_t j = 0; j < c.out_dim; ++j) {
      const long double d = in[j] - batch.target(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      r.loss += d * d;
      r.outputs.push_back(in[j]);
    }
  }
  r.loss /= static_cast<long double>(n);
  return r;
}

GradCheck gradient_check(const nn::Mlp& net, const nn::Batch& batch, double h, double floor) {
  const auto lg = nn::loss_and_grad(net, batch);
  std::vector<double> analytic;
  for (const auto& l : lg.grad.layers) {
    analytic.insert(analytic.end(), l.weight.data(), l.weight.data() + l.weight.size());
    analytic.insert(analytic.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  const std::vector<double> theta = net.flatten();
  const auto base = reference_eval(net.config(), theta, batch);
  GradCheck out;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    auto plus = theta;
    auto minus = theta;
    plus[k] += h;
    minus[k] -= h;
    const auto ep = reference_eval(net.config(), plus, batch);
    const auto em = reference_eval(net.config(), minus, batch);
    if (ep.pattern != base.pattern || em.pattern != base.pattern) {
      ++out.skipped;
      continue;
    }
    const double fd = static_cast<double>((ep.loss - em.loss) / (2.0L * h));
    const double scale = std::max({std::abs(fd), std::abs(analytic[k]), floor});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(fd - analytic[k]) / scale);
    ++out.checked;
  }
  return out;
}

RandomCase random_case(RngStream& rng) {
  nn::MlpConfig c;
  c.x_dim = 1 + rng.below(3);
  c.cond_dim = rng.below(4);
  c.time_input = rng.below(4) != 0;
  c.fourier_features = c.time_input ? rng.below(3) : 0;
  c.hidden.clear();
  const std::size_t depth = rng.below(4);
  for (std::size_t i = 0; i < depth; ++i) c.hidden.push_back(2 + rng.below(11));
  c.out_dim = c.x_dim;
  if (rng.below(3) == 0) c.output_cap = rng.uniform(0.2, 2.0);

  nn::Mlp net = nn::Mlp::he_uniform(c, rng);
  auto p = net.flatten();
  for (auto& v : p) v += 0.1 * rng.gaussian();
  net.unflatten(p);

  const std::size_t n = 1 + rng.below(8);
  nn::Batch b;
  b.x = gauss_matrix(rng, n, c.x_dim);
  b.y = gauss_matrix(rng, n, c.cond_dim);
  if (c.time_input) {
    b.t.resize(static_cast<Eigen::Index>(n));
    for (auto& t : b.t) t = rng.uniform();
  }
  b.target = gauss_matrix(rng, n, c.out_dim);
  return {std::move(net), std::move(b)};
}

double posterior_mean_50(const std::vector<double>& atoms, const std::vector<double>& weights, double x, double t) {
  using F = boost::multiprecision::cpp_dec_float_50;
  const F tt(t);
  const F xx(x);
  const F var = 1 - tt * tt;
  F num = 0, den = 0;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const F d = xx - tt * F(atoms[k]);
    const F w = F(weights[k]) * exp(-d * d / (2 * var));
    num += w * F(atoms[k]);
    den += w;
  }
  return static_cast<double>(num / den);
}

double boost_t_quantile(double df, double p) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

LossGap loss_gap(const flow::VelocityField& v, const flow::VelocityField& v_ref,
                 const std::function<Vector(RngStream&)>& draw_x, const Vector& y, double stop_time,
                 std::size_t draws, RngStream& rng) {
  double sg = 0, sg2 = 0, si = 0, si2 = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const Vector x = draw_x(rng);
    const Vector w = gauss_vector(rng, static_cast<std::size_t>(x.size()));
    const double t = rng.uniform(0.0, stop_time);
    const Vector wt = t * x + std::sqrt(1 - t * t) * w;
    const Vector target = x - t / std::sqrt(1 - t * t) * w;
    const Vector a = v.evaluate(wt, y, t);
    const Vector b = v_ref.evaluate(wt, y, t);
    const double g = (target - a).squaredNorm() - (target - b).squaredNorm();
    const double e = (a - b).squaredNorm();
    sg += g;
    sg2 += g * g;
    si += e;
    si2 += e * e;
  }
  const double n = static_cast<double>(draws);
  LossGap out;
  out.gap = sg / n;
  out.gap_se = std::sqrt(std::max(0.0, sg2 / n - out.gap * out.gap) / n);
  out.integral = si / n;
  out.integral_se = std::sqrt(std::max(0.0, si2 / n - out.integral * out.integral) / n);
  return out;
}

} // namespace follmer::ref
