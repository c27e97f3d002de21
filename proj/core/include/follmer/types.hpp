#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace follmer {

// All numeric work is double precision; matrices are row-major so that one
// sample is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

void require_dims(std::size_t got, std::size_t want, const char* what);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool operator==(const Interval&) const = default;
};

//! Shape of a paired sample (X in R^dx, Y in R^dy) plus optional support boxes.
struct DataSpec {
  std::size_t dx = 1;
  std::size_t dy = 0;
  std::vector<Interval> x_bounds; // empty, or one per X coordinate
  std::vector<Interval> y_bounds; // empty, or one per Y coordinate with lo == 0

  void validate() const;
  bool operator==(const DataSpec&) const = default;
};

struct Dataset {
  DataSpec spec;
  Matrix xs; // n x dx
  Matrix ys; // n x dy

  Dataset() = default;
  Dataset(DataSpec spec, Matrix xs, Matrix ys);

  std::size_t size() const { return static_cast<std::size_t>(xs.rows()); }
  bool empty() const { return size() == 0; }
  void validate() const;
};

//! Uniform time grid t_k = k T / N, k = 0..N, with stopping time T in (0, 1).
class FlowConfig {
public:
  FlowConfig(double stop_time, std::size_t steps);

  double stop_time() const { return stop_time_; }
  std::size_t steps() const { return steps_; }
  double step_size() const { return stop_time_ / static_cast<double>(steps_); }
  double time(std::size_t k) const;
  std::vector<double> grid() const;

private:
  double stop_time_;
  std::size_t steps_;
};

//! W_t = t x + sqrt(1 - t^2) w.
Vector interpolant(const Vector& x, const Vector& w, double t);

//! Row-wise interpolant; xs and ws must have equal shape, ts one entry per row.
Matrix interpolant(const Matrix& xs, const Matrix& ws, const Vector& ts);

bool all_finite(const Matrix& m);

} // namespace follmer
