#pragma once

#include "follmer/rng.hpp"
#include "follmer/types.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>

namespace follmer::synth {

enum class Shape { four_squares, checkerboard, pinwheel, rings, swiss_roll };
enum class Model { M1, M2, M3 };

Shape parse_shape(const std::string& name);
std::string shape_name(Shape s);
Model parse_model(const std::string& name);
std::string model_name(Model m);

struct ShapeSpec {
  Shape shape = Shape::checkerboard;
  std::size_t n = 5000;
  std::uint64_t seed = 0;
};

struct RegressionModelSpec {
  Model model = Model::M1;
  std::size_t n = 5000;
  std::uint64_t seed = 0;
};

/// Two-dimensional toy shapes, returned with X the horizontal coordinate and
/// Y the vertical one (dx = dy = 1). Definitions:
///   four_squares  uniform on the side-1 squares centred at (+-1, +-1)
///   checkerboard  alternating 4 x 4 board on [-2, 2]^2
///   pinwheel      5 arms, radial N(1, 0.3^2), tangential N(0, 0.05^2),
///                 arm angle plus 0.25 a |a| of twist
///   rings         radii {0.5, 1, 1.5, 2}, angle uniform, N(0, 0.02^2) noise
///   swiss_roll    theta ~ U(1.5 pi, 4.5 pi), (theta cos, theta sin) * 2 / (4.5 pi)
///                 plus N(0, 0.05^2) noise
Dataset gen_shape(const ShapeSpec& spec);

//! Draws a single point (x, y) of the shape.
std::pair<double, double> draw_shape_point(Shape shape, RngStream& rng);

//! Conditional density p(x | y) of a shape along the slice at height y.
using SliceDensity = std::function<double(double x)>;

/// Exact slice density for four_squares and checkerboard; rings and
/// swiss_roll integrate the noisy curve over its angle and normalise
/// numerically; pinwheel falls back to a KDE of reference draws near y.
/// support() gives an interval that carries essentially all the mass.
struct ShapeSlice {
  SliceDensity density;
  Interval support;
};
ShapeSlice shape_slice(Shape shape, double y, std::uint64_t reference_seed = 7);

//! M1, M2: dx = 1, dy = 5, Y ~ N(0, I_5). M3: dx = dy = 1, Y ~ N(0, 1).
Dataset gen_regression(const RegressionModelSpec& spec);
std::size_t regression_cond_dim(Model model);

double true_mean(Model model, const Vector& y);
double true_std(Model model, const Vector& y);
//! One draw of X given Y = y.
double draw_conditional(Model model, const Vector& y, RngStream& rng);
//! One draw of Y from its marginal.
Vector draw_condition(Model model, RngStream& rng);

/// Per-coordinate affine maps to [0, 1]; blocks may be left unscaled.
struct ScalingRecord {
  std::vector<Interval> x_range;
  std::vector<Interval> y_range;
  bool x_applied = false;
  bool y_applied = false;

  static ScalingRecord fit(const Dataset& data);
  static ScalingRecord identity(const DataSpec& spec);

  Dataset apply(const Dataset& data) const;
  Matrix apply_x(const Matrix& xs) const;
  Matrix apply_y(const Matrix& ys) const;
  Matrix invert_x(const Matrix& xs) const;
  Matrix invert_y(const Matrix& ys) const;
  Dataset invert(const Dataset& data) const;

  bool operator==(const ScalingRecord&) const = default;
};

//! Header x0..x{dx-1},y0..y{dy-1}, 17 significant digits.
void write_csv(std::ostream& out, const Dataset& data);
void save_csv(const std::string& path, const Dataset& data);

//! Rows of a sample matrix with header x0..x{dx-1}.
void write_matrix_csv(std::ostream& out, const Matrix& m, const std::string& prefix = "x");

/// First dx columns are X, the next dy are Y; extra columns are ignored.
/// Malformed rows raise an error naming the line.
std::pair<Dataset, ScalingRecord> read_csv(std::istream& in, std::size_t dx, std::size_t dy, bool scale,
                                           const std::string& name = "<stream>");
std::pair<Dataset, ScalingRecord> load_csv(const std::string& path, std::size_t dx, std::size_t dy, bool scale);

} // namespace follmer::synth
