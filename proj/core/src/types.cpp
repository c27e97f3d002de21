#include "follmer/types.hpp"

#include <cmath>
#include <string>

namespace follmer {

void require_dims(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(want) + ", got " +
                         std::to_string(got));
  }
}

void DataSpec::validate() const {
  if (dx < 1) {
    throw Error("DataSpec: dx must be at least 1");
  }
  if (!x_bounds.empty()) {
    require_dims(x_bounds.size(), dx, "DataSpec x_bounds");
    for (const auto& b : x_bounds) {
      if (!(b.lo < b.hi)) {
        throw Error("DataSpec: x bound requires lo < hi");
      }
    }
  }
  if (!y_bounds.empty()) {
    require_dims(y_bounds.size(), dy, "DataSpec y_bounds");
    for (const auto& b : y_bounds) {
      if (b.lo != 0.0 || !(b.hi > 0.0)) {
        throw Error("DataSpec: y bound must be [0, B] with B > 0");
      }
    }
  }
}

Dataset::Dataset(DataSpec s, Matrix x, Matrix y) : spec(std::move(s)), xs(std::move(x)), ys(std::move(y)) {
  validate();
}

void Dataset::validate() const {
  spec.validate();
  if (xs.rows() != ys.rows()) {
    throw DimensionError("Dataset: xs and ys have different row counts");
  }
  require_dims(static_cast<std::size_t>(xs.cols()), spec.dx, "Dataset xs columns");
  require_dims(static_cast<std::size_t>(ys.cols()), spec.dy, "Dataset ys columns");
}

FlowConfig::FlowConfig(double stop_time, std::size_t steps) : stop_time_(stop_time), steps_(steps) {
  if (!(stop_time > 0.0 && stop_time < 1.0)) {
    throw Error("FlowConfig: stopping time must lie in (0, 1)");
  }
  if (steps < 1) {
    throw Error("FlowConfig: at least one step is required");
  }
}

double FlowConfig::time(std::size_t k) const {
  if (k == steps_) {
    return stop_time_;
  }
  return static_cast<double>(k) * stop_time_ / static_cast<double>(steps_);
}

std::vector<double> FlowConfig::grid() const {
  std::vector<double> g(steps_ + 1);
  for (std::size_t k = 0; k <= steps_; ++k) {
    g[k] = time(k);
  }
  return g;
}

Vector interpolant(const Vector& x, const Vector& w, double t) {
  require_dims(static_cast<std::size_t>(w.size()), static_cast<std::size_t>(x.size()), "interpolant");
  if (!(t >= 0.0 && t <= 1.0)) {
    throw Error("interpolant: t must lie in [0, 1]");
  }
  return t * x + std::sqrt(1.0 - t * t) * w;
}

Matrix interpolant(const Matrix& xs, const Matrix& ws, const Vector& ts) {
  if (xs.rows() != ws.rows() || xs.cols() != ws.cols() || ts.size() != xs.rows()) {
    throw DimensionError("interpolant: shape mismatch");
  }
  Matrix out(xs.rows(), xs.cols());
  for (Eigen::Index i = 0; i < xs.rows(); ++i) {
    const double t = ts[i];
    out.row(i) = t * xs.row(i) + std::sqrt(1.0 - t * t) * ws.row(i);
  }
  return out;
}

bool all_finite(const Matrix& m) {
  return m.allFinite();
}

} // namespace follmer
