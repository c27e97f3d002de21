#include "follmer/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace follmer::synth {

namespace {

constexpr std::uint64_t kShapeStream = 31;
constexpr std::uint64_t kRegressionStream = 32;

constexpr double kPi = std::numbers::pi;
constexpr double kRingSigma = 0.02;
constexpr double kRollSigma = 0.05;
constexpr double kRollScale = 2.0 / (4.5 * kPi);
constexpr double kPinRadial = 0.3;
constexpr double kPinTangential = 0.05;
constexpr double kPinTwist = 0.25;
constexpr int kPinArms = 5;

// Piecewise-linear density on a uniform grid; zero outside [lo, hi].
struct Tabulated {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> values;

  double operator()(double x) const {
    if (!(x >= lo && x <= hi)) {
      return 0.0;
    }
    const double pos = (x - lo) / (hi - lo) * static_cast<double>(values.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(pos), values.size() - 2);
    const double f = pos - static_cast<double>(i);
    return (1.0 - f) * values[i] + f * values[i + 1];
  }
};

// Normalised mixture sum_j w_j N(c_j, sigma^2), tabulated on [lo, hi].
Tabulated tabulate_mixture(const std::vector<double>& centers, const std::vector<double>& weights, double sigma,
                           double lo, double hi, std::size_t points = 4097) {
  Tabulated tab{lo, hi, std::vector<double>(points, 0.0)};
  const double step = (hi - lo) / static_cast<double>(points - 1);
  const double reach = 8.0 * sigma;
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const double c = centers[j];
    const auto first = static_cast<long>(std::ceil((c - reach - lo) / step));
    const auto last = static_cast<long>(std::floor((c + reach - lo) / step));
    for (long i = std::max(0L, first); i <= std::min(static_cast<long>(points) - 1, last); ++i) {
      const double z = (lo + static_cast<double>(i) * step - c) / sigma;
      tab.values[static_cast<std::size_t>(i)] += weights[j] * std::exp(-0.5 * z * z);
    }
  }
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < points; ++i) {
    mass += 0.5 * (tab.values[i] + tab.values[i + 1]) * step;
  }
  if (!(mass > 0.0)) {
    throw Error("shape slice: no probability mass at this height");
  }
  for (auto& v : tab.values) {
    v /= mass;
  }
  return tab;
}

// Noisy curve c(theta), theta uniform: slice at height y is a Gaussian mixture
// over the curve points weighted by their vertical likelihood.
template <typename Curve>
ShapeSlice curve_slice(Curve curve, double theta_lo, double theta_hi, std::size_t count, double sigma, double y,
                       Interval support) {
  std::vector<double> centers;
  std::vector<double> weights;
  for (std::size_t i = 0; i < count; ++i) {
    const double theta = theta_lo + (theta_hi - theta_lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
    const auto [cx, cy] = curve(theta);
    const double z = (y - cy) / sigma;
    if (std::abs(z) < 8.0) {
      centers.push_back(cx);
      weights.push_back(std::exp(-0.5 * z * z));
    }
  }
  auto tab = std::make_shared<Tabulated>(tabulate_mixture(centers, weights, sigma, support.lo, support.hi));
  return {[tab](double x) { return (*tab)(x); }, support};
}

// Shared reference draws for densities without a closed slice form.
const std::vector<std::pair<double, double>>& reference_draws(Shape shape, std::uint64_t seed) {
  static std::mutex mu;
  static std::map<std::pair<int, std::uint64_t>, std::vector<std::pair<double, double>>> cache;
  const std::lock_guard<std::mutex> lock(mu);
  auto& draws = cache[{static_cast<int>(shape), seed}];
  if (draws.empty()) {
    const RngStream base(seed, kShapeStream);
    draws.resize(1000000);
    for (std::size_t i = 0; i < draws.size(); ++i) {
      RngStream r = base.substream(i);
      draws[i] = draw_shape_point(shape, r);
    }
  }
  return draws;
}

double parse_field(const std::string& text, std::size_t line_no, const std::string& name) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() && text.find_first_not_of(" \t\r", used) != std::string::npos) {
      throw std::invalid_argument(text);
    }
    return v;
  } catch (const std::exception&) {
    throw Error(name + ": line " + std::to_string(line_no) + ": not a number: '" + text + "'");
  }
}

void write_value(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

std::vector<Interval> column_ranges(const Matrix& m) {
  std::vector<Interval> out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const double lo = m.col(j).minCoeff();
    const double hi = m.col(j).maxCoeff();
    if (!(hi > lo)) {
      throw Error("scaling: column " + std::to_string(j) + " is constant");
    }
    out.push_back({lo, hi});
  }
  return out;
}

Matrix affine(const Matrix& m, const std::vector<Interval>& ranges, bool forward) {
  require_dims(static_cast<std::size_t>(m.cols()), ranges.size(), "scaling columns");
  Matrix out = m;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const auto& r = ranges[static_cast<std::size_t>(j)];
    if (forward) {
      out.col(j) = (m.col(j).array() - r.lo) / r.width();
    } else {
      out.col(j) = m.col(j).array() * r.width() + r.lo;
    }
  }
  return out;
}

} // namespace

Shape parse_shape(const std::string& name) {
  if (name == "four_squares") return Shape::four_squares;
  if (name == "checkerboard") return Shape::checkerboard;
  if (name == "pinwheel") return Shape::pinwheel;
  if (name == "rings") return Shape::rings;
  if (name == "swiss_roll") return Shape::swiss_roll;
  throw Error("unknown shape '" + name + "' (expected four_squares, checkerboard, pinwheel, rings or swiss_roll)");
}

std::string shape_name(Shape s) {
  switch (s) {
  case Shape::four_squares: return "four_squares";
  case Shape::checkerboard: return "checkerboard";
  case Shape::pinwheel: return "pinwheel";
  case Shape::rings: return "rings";
  case Shape::swiss_roll: return "swiss_roll";
  }
  return "?";
}

Model parse_model(const std::string& name) {
  if (name == "M1" || name == "m1") return Model::M1;
  if (name == "M2" || name == "m2") return Model::M2;
  if (name == "M3" || name == "m3") return Model::M3;
  throw Error("unknown regression model '" + name + "' (expected M1, M2 or M3)");
}

std::string model_name(Model m) {
  switch (m) {
  case Model::M1: return "M1";
  case Model::M2: return "M2";
  case Model::M3: return "M3";
  }
  return "?";
}

std::pair<double, double> draw_shape_point(Shape shape, RngStream& rng) {
  switch (shape) {
  case Shape::four_squares: {
    const double cx = rng.below(2) == 0 ? -1.0 : 1.0;
    const double cy = rng.below(2) == 0 ? -1.0 : 1.0;
    return {cx + rng.uniform(-0.5, 0.5), cy + rng.uniform(-0.5, 0.5)};
  }
  case Shape::checkerboard: {
    const double x1 = rng.uniform(-2.0, 2.0);
    const double u = rng.uniform();
    const auto j = static_cast<double>(rng.below(2));
    const double parity = std::fmod(std::floor(x1 + 2.0), 2.0);
    return {x1, u + 2.0 * j - 2.0 + parity};
  }
  case Shape::pinwheel: {
    const auto arm = static_cast<double>(rng.below(kPinArms));
    const double a = 1.0 + kPinRadial * rng.gaussian();
    const double b = kPinTangential * rng.gaussian();
    const double theta = arm * 2.0 * kPi / kPinArms + kPinTwist * a * std::abs(a);
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    return {c * a - s * b, s * a + c * b};
  }
  case Shape::rings: {
    const double r = 0.5 * static_cast<double>(1 + rng.below(4));
    const double theta = rng.uniform(0.0, 2.0 * kPi);
    const double nx = kRingSigma * rng.gaussian();
    const double ny = kRingSigma * rng.gaussian();
    return {r * std::cos(theta) + nx, r * std::sin(theta) + ny};
  }
  case Shape::swiss_roll: {
    const double theta = rng.uniform(1.5 * kPi, 4.5 * kPi);
    const double nx = kRollSigma * rng.gaussian();
    const double ny = kRollSigma * rng.gaussian();
    return {kRollScale * theta * std::cos(theta) + nx, kRollScale * theta * std::sin(theta) + ny};
  }
  }
  throw Error("draw_shape_point: invalid shape");
}

Dataset gen_shape(const ShapeSpec& spec) {
  if (spec.n < 1) {
    throw Error("gen_shape: n must be at least 1");
  }
  const auto n = static_cast<Eigen::Index>(spec.n);
  Matrix xs(n, 1);
  Matrix ys(n, 1);
  const RngStream base(spec.seed, kShapeStream);
  for (Eigen::Index i = 0; i < n; ++i) {
    RngStream r = base.substream(static_cast<std::uint64_t>(i));
    const auto [x, y] = draw_shape_point(spec.shape, r);
    xs(i, 0) = x;
    ys(i, 0) = y;
  }
  return Dataset(DataSpec{1, 1, {}, {}}, std::move(xs), std::move(ys));
}

ShapeSlice shape_slice(Shape shape, double y, std::uint64_t reference_seed) {
  switch (shape) {
  case Shape::four_squares:
    return {[](double x) {
              const double a = std::abs(x);
              return a >= 0.5 && a <= 1.5 ? 0.5 : 0.0;
            },
            {-1.5, 1.5}};
  case Shape::checkerboard: {
    const double row = std::clamp(std::floor(y + 2.0), 0.0, 3.0);
    const double parity = std::fmod(row, 2.0);
    return {[parity](double x) {
              if (x < -2.0 || x > 2.0) {
                return 0.0;
              }
              const double col = std::min(std::floor(x + 2.0), 3.0);
              return std::fmod(col, 2.0) == parity ? 0.5 : 0.0;
            },
            {-2.0, 2.0}};
  }
  case Shape::rings: {
    std::vector<double> centers;
    std::vector<double> weights;
    // Merge the four radii into one mixture; each ring has mass 1/4.
    for (int k = 1; k <= 4; ++k) {
      const double r = 0.5 * k;
      const std::size_t count = 8192;
      for (std::size_t i = 0; i < count; ++i) {
        const double theta = 2.0 * kPi * (static_cast<double>(i) + 0.5) / static_cast<double>(count);
        const double z = (y - r * std::sin(theta)) / kRingSigma;
        if (std::abs(z) < 8.0) {
          centers.push_back(r * std::cos(theta));
          weights.push_back(std::exp(-0.5 * z * z));
        }
      }
    }
    const Interval support{-2.0 - 10 * kRingSigma, 2.0 + 10 * kRingSigma};
    auto tab = std::make_shared<Tabulated>(tabulate_mixture(centers, weights, kRingSigma, support.lo, support.hi));
    return {[tab](double x) { return (*tab)(x); }, support};
  }
  case Shape::swiss_roll: {
    auto curve = [](double theta) {
      return std::pair{kRollScale * theta * std::cos(theta), kRollScale * theta * std::sin(theta)};
    };
    return curve_slice(curve, 1.5 * kPi, 4.5 * kPi, 16384, kRollSigma, y,
                       {-2.0 - 10 * kRollSigma, 2.0 + 10 * kRollSigma});
  }
  case Shape::pinwheel: {
    const auto& draws = reference_draws(shape, reference_seed);
    const double window = 0.02;
    std::vector<double> xs;
    for (const auto& [px, py] : draws) {
      if (std::abs(py - y) < window) {
        xs.push_back(px);
      }
    }
    if (xs.size() < 2) {
      throw Error("pinwheel slice: no reference draws near y = " + std::to_string(y));
    }
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double v : xs) var += (v - mean) * (v - mean);
    var /= static_cast<double>(xs.size() - 1);
    const double h = 1.06 * std::sqrt(var) * std::pow(static_cast<double>(xs.size()), -0.2);
    const auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    const Interval support{*mn - 6 * h, *mx + 6 * h};
    auto tab = std::make_shared<Tabulated>(
        tabulate_mixture(xs, std::vector<double>(xs.size(), 1.0), h, support.lo, support.hi));
    return {[tab](double x) { return (*tab)(x); }, support};
  }
  }
  throw Error("shape_slice: invalid shape");
}

std::size_t regression_cond_dim(Model model) {
  return model == Model::M3 ? 1 : 5;
}

double true_mean(Model model, const Vector& y) {
  require_dims(static_cast<std::size_t>(y.size()), regression_cond_dim(model), "regression condition");
  switch (model) {
  case Model::M1: return y[0] * y[0] + std::exp(y[1] + 0.25 * y[2]) + std::cos(y[3] + y[4]);
  case Model::M2: return y[0] * y[0] + std::exp(y[1] + 0.25 * y[2]) + y[3] - y[4];
  case Model::M3: return 0.0;
  }
  return 0.0;
}

double true_std(Model model, const Vector& y) {
  require_dims(static_cast<std::size_t>(y.size()), regression_cond_dim(model), "regression condition");
  switch (model) {
  case Model::M1: return 1.0;
  case Model::M2: return 0.5 + 0.5 * y[1] * y[1] + 0.5 * y[4] * y[4];
  case Model::M3: return std::sqrt(y[0] * y[0] + 0.0625);
  }
  return 0.0;
}

double draw_conditional(Model model, const Vector& y, RngStream& rng) {
  if (model == Model::M3) {
    require_dims(static_cast<std::size_t>(y.size()), 1, "regression condition");
    const double u = rng.uniform();
    const double z = rng.gaussian();
    return (u <= 0.5 ? -y[0] : y[0]) + 0.25 * z;
  }
  return true_mean(model, y) + true_std(model, y) * rng.gaussian();
}

Vector draw_condition(Model model, RngStream& rng) {
  return gauss_vector(rng, regression_cond_dim(model));
}

Dataset gen_regression(const RegressionModelSpec& spec) {
  if (spec.n < 1) {
    throw Error("gen_regression: n must be at least 1");
  }
  const auto n = static_cast<Eigen::Index>(spec.n);
  const std::size_t dy = regression_cond_dim(spec.model);
  Matrix xs(n, 1);
  Matrix ys(n, static_cast<Eigen::Index>(dy));
  const RngStream base(spec.seed, kRegressionStream);
  for (Eigen::Index i = 0; i < n; ++i) {
    RngStream r = base.substream(static_cast<std::uint64_t>(i));
    const Vector y = draw_condition(spec.model, r);
    ys.row(i) = y.transpose();
    xs(i, 0) = draw_conditional(spec.model, y, r);
  }
  return Dataset(DataSpec{1, dy, {}, {}}, std::move(xs), std::move(ys));
}

ScalingRecord ScalingRecord::fit(const Dataset& data) {
  ScalingRecord rec;
  rec.x_range = column_ranges(data.xs);
  rec.y_range = data.spec.dy > 0 ? column_ranges(data.ys) : std::vector<Interval>{};
  rec.x_applied = true;
  rec.y_applied = true;
  return rec;
}

ScalingRecord ScalingRecord::identity(const DataSpec& spec) {
  ScalingRecord rec;
  rec.x_range.assign(spec.dx, Interval{0.0, 1.0});
  rec.y_range.assign(spec.dy, Interval{0.0, 1.0});
  return rec;
}

Matrix ScalingRecord::apply_x(const Matrix& xs) const {
  return x_applied ? affine(xs, x_range, true) : xs;
}

Matrix ScalingRecord::apply_y(const Matrix& ys) const {
  return y_applied ? affine(ys, y_range, true) : ys;
}

Matrix ScalingRecord::invert_x(const Matrix& xs) const {
  return x_applied ? affine(xs, x_range, false) : xs;
}

Matrix ScalingRecord::invert_y(const Matrix& ys) const {
  return y_applied ? affine(ys, y_range, false) : ys;
}

Dataset ScalingRecord::apply(const Dataset& data) const {
  DataSpec spec = data.spec;
  if (x_applied) {
    spec.x_bounds.assign(spec.dx, Interval{0.0, 1.0});
  }
  if (y_applied) {
    spec.y_bounds.assign(spec.dy, Interval{0.0, 1.0});
  }
  return Dataset(std::move(spec), apply_x(data.xs), apply_y(data.ys));
}

Dataset ScalingRecord::invert(const Dataset& data) const {
  DataSpec spec = data.spec;
  spec.x_bounds.clear();
  spec.y_bounds.clear();
  return Dataset(std::move(spec), invert_x(data.xs), invert_y(data.ys));
}

void write_csv(std::ostream& out, const Dataset& data) {
  const std::size_t dx = data.spec.dx;
  const std::size_t dy = data.spec.dy;
  for (std::size_t j = 0; j < dx; ++j) {
    out << (j ? "," : "") << 'x' << j;
  }
  for (std::size_t j = 0; j < dy; ++j) {
    out << ",y" << j;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < data.xs.rows(); ++i) {
    for (Eigen::Index j = 0; j < data.xs.cols(); ++j) {
      if (j) out << ',';
      write_value(out, data.xs(i, j));
    }
    for (Eigen::Index j = 0; j < data.ys.cols(); ++j) {
      out << ',';
      write_value(out, data.ys(i, j));
    }
    out << '\n';
  }
}

void save_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + path);
  }
  write_csv(out, data);
}

void write_matrix_csv(std::ostream& out, const Matrix& m, const std::string& prefix) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    out << (j ? "," : "") << prefix << j;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      write_value(out, m(i, j));
    }
    out << '\n';
  }
}

std::pair<Dataset, ScalingRecord> read_csv(std::istream& in, std::size_t dx, std::size_t dy, bool scale,
                                           const std::string& name) {
  if (dx < 1) {
    throw Error("load_csv: dx must be at least 1");
  }
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw Error(name + ": empty file (a header row is required)");
  }
  ++line_no;
  std::vector<std::vector<double>> rows;
  const std::size_t need = dx + dy;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.find_first_not_of(" \t") == std::string::npos) {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
      fields.push_back(f);
    }
    if (!line.empty() && line.back() == ',') {
      fields.emplace_back();
    }
    if (fields.size() < need) {
      throw Error(name + ": line " + std::to_string(line_no) + ": expected at least " + std::to_string(need) +
                  " columns, got " + std::to_string(fields.size()));
    }
    std::vector<double> row(need);
    for (std::size_t j = 0; j < need; ++j) {
      row[j] = parse_field(fields[j], line_no, name);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw Error(name + ": no data rows");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix xs(n, static_cast<Eigen::Index>(dx));
  Matrix ys(n, static_cast<Eigen::Index>(dy));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < dx; ++j) xs(i, static_cast<Eigen::Index>(j)) = r[j];
    for (std::size_t j = 0; j < dy; ++j) ys(i, static_cast<Eigen::Index>(j)) = r[dx + j];
  }
  Dataset data(DataSpec{dx, dy, {}, {}}, std::move(xs), std::move(ys));
  if (!scale) {
    return {std::move(data), ScalingRecord::identity(data.spec)};
  }
  ScalingRecord rec = ScalingRecord::fit(data);
  Dataset scaled = rec.apply(data);
  return {std::move(scaled), std::move(rec)};
}

std::pair<Dataset, ScalingRecord> load_csv(const std::string& path, std::size_t dx, std::size_t dy, bool scale) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open csv file: " + path);
  }
  return read_csv(in, dx, dy, scale, path);
}

} // namespace follmer::synth
