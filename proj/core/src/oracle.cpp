#include "follmer/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

namespace follmer::oracle {

namespace {

void require_time(double t, const char* what) {
  if (!(t >= 0.0 && t < 1.0)) {
    throw Error(std::string(what) + ": t must lie in [0, 1)");
  }
}

// Dense view of a mixture used by the inner loops.
struct Packed {
  Matrix locations; // K x dx
  Vector log_weights;

  explicit Packed(const AtomMixture& m) {
    const auto k = static_cast<Eigen::Index>(m.size());
    locations.resize(k, static_cast<Eigen::Index>(m.dim()));
    log_weights.resize(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      locations.row(i) = m.atoms()[static_cast<std::size_t>(i)].location.transpose();
      log_weights[i] = std::log(m.atoms()[static_cast<std::size_t>(i)].weight);
    }
  }

  // Writes normalised softmax weights into w; returns log sum_k exp(logit_k).
  template <typename Row>
  double posterior_weights(const Row& x, double t, Vector& w) const {
    const double sum = softmax(x, t, w);
    return top_ + std::log(sum);
  }

  // Unnormalised exp(logit - max) in w; returns their sum. top_ keeps the max.
  template <typename Row>
  double softmax(const Row& x, double t, Vector& w) const {
    const double a = 0.5 / (1.0 - t * t);
    const Eigen::Index k = locations.rows();
    w.resize(k);
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < k; ++i) {
      w[i] = log_weights[i] - a * (x - t * locations.row(i)).squaredNorm();
      top = std::max(top, w[i]);
    }
    double sum = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) {
      w[i] = std::exp(w[i] - top);
      sum += w[i];
    }
    w /= sum;
    top_ = top;
    return sum;
  }

  template <typename Row>
  RowVector posterior_mean(const Row& x, double t, Vector& w) const {
    softmax(x, t, w);
    return w.transpose() * locations;
  }

  // Velocity rows without temporaries; the hot path of the Euler sampler.
  template <typename Row, typename Out>
  void velocity_into(const Row& x, double t, double inv, Vector& w, Out&& out) const {
    softmax(x, t, w);
    out.noalias() = w.transpose() * locations;
    out = (out - t * x) * inv;
  }

  mutable double top_ = 0.0;
};

std::vector<double> parse_numbers(const std::string& text, std::size_t line_no) {
  std::istringstream is(text);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) {
        throw std::invalid_argument(tok);
      }
    } catch (const std::exception&) {
      throw Error("target file line " + std::to_string(line_no) + ": not a number: " + tok);
    }
  }
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

} // namespace

AtomMixture::AtomMixture(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) {
    throw Error("AtomMixture: at least one atom is required");
  }
  double total = 0.0;
  for (const auto& a : atoms_) {
    if (a.location.size() != atoms_.front().location.size() || a.location.size() == 0) {
      throw DimensionError("AtomMixture: atoms must share a positive dimension");
    }
    if (!(a.weight > 0.0)) {
      throw Error("AtomMixture: weights must be positive");
    }
    total += a.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error("AtomMixture: weights must sum to 1");
  }
}

AtomMixture AtomMixture::uniform(const std::vector<Vector>& locations) {
  std::vector<Atom> atoms;
  for (const auto& u : locations) {
    atoms.push_back({u, 1.0 / static_cast<double>(locations.size())});
  }
  return AtomMixture(std::move(atoms));
}

AtomMixture AtomMixture::point(const Vector& location) {
  return AtomMixture({{location, 1.0}});
}

Vector AtomMixture::mean() const {
  Vector m = Vector::Zero(atoms_.front().location.size());
  for (const auto& a : atoms_) {
    m += a.weight * a.location;
  }
  return m;
}

DiscreteConditionalTarget::DiscreteConditionalTarget(std::size_t dx, std::size_t dy, Resolver resolver)
    : dx_(dx), dy_(dy), resolver_(std::move(resolver)) {
  if (dx_ < 1) {
    throw Error("DiscreteConditionalTarget: dx must be positive");
  }
}

DiscreteConditionalTarget DiscreteConditionalTarget::unconditional(AtomMixture mixture, std::size_t dy) {
  auto shared = std::make_shared<const AtomMixture>(std::move(mixture));
  const std::size_t dx = shared->dim();
  return DiscreteConditionalTarget(dx, dy, [shared](const Vector&) { return shared; });
}

DiscreteConditionalTarget DiscreteConditionalTarget::keyed(std::size_t dy,
                                                           std::vector<std::pair<Vector, AtomMixture>> entries) {
  if (entries.empty()) {
    throw Error("DiscreteConditionalTarget: no conditions given");
  }
  std::vector<std::pair<Vector, std::shared_ptr<const AtomMixture>>> table;
  const std::size_t dx = entries.front().second.dim();
  for (auto& [key, mix] : entries) {
    require_dims(static_cast<std::size_t>(key.size()), dy, "condition key");
    require_dims(mix.dim(), dx, "condition mixture");
    table.emplace_back(key, std::make_shared<const AtomMixture>(std::move(mix)));
  }
  return DiscreteConditionalTarget(dx, dy, [table = std::move(table)](const Vector& y) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double d = (table[i].first - y).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return table[best].second;
  });
}

std::shared_ptr<const AtomMixture> DiscreteConditionalTarget::mixture(const Vector& y) const {
  require_dims(static_cast<std::size_t>(y.size()), dy_, "DiscreteConditionalTarget condition");
  return resolver_(y);
}

Matrix DiscreteConditionalTarget::evaluate(const Matrix& x, const Matrix& y, double t) const {
  require_time(t, "oracle velocity");
  require_dims(static_cast<std::size_t>(x.cols()), dx_, "oracle velocity x");
  require_dims(static_cast<std::size_t>(y.cols()), dy_, "oracle velocity y");
  if (y.rows() != 1 && y.rows() != x.rows()) {
    throw DimensionError("oracle velocity: y must have one row or one row per x row");
  }
  const double inv = 1.0 / (1.0 - t * t);
  Matrix out(x.rows(), x.cols());
  Vector w;
  if (y.rows() == 1) {
    const Packed packed(*mixture(y.row(0).transpose()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      packed.velocity_into(x.row(i), t, inv, w, out.row(i));
    }
  } else {
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const Packed packed(*mixture(y.row(i).transpose()));
      packed.velocity_into(x.row(i), t, inv, w, out.row(i));
    }
  }
  return out;
}

Vector posterior_mean(const AtomMixture& mixture, const Vector& x, double t) {
  require_time(t, "posterior_mean");
  require_dims(static_cast<std::size_t>(x.size()), mixture.dim(), "posterior_mean x");
  Vector w;
  return Packed(mixture).posterior_mean(x.transpose(), t, w).transpose();
}

Vector posterior_mean(const DiscreteConditionalTarget& target, const Vector& x, const Vector& y, double t) {
  return posterior_mean(*target.mixture(y), x, t);
}

Vector oracle_velocity(const AtomMixture& mixture, const Vector& x, double t) {
  return (posterior_mean(mixture, x, t) - t * x) / (1.0 - t * t);
}

Vector oracle_velocity(const DiscreteConditionalTarget& target, const Vector& x, const Vector& y, double t) {
  return oracle_velocity(*target.mixture(y), x, t);
}

double log_interpolant_density(const AtomMixture& mixture, const Vector& x, double t) {
  require_time(t, "interpolant_density");
  require_dims(static_cast<std::size_t>(x.size()), mixture.dim(), "interpolant_density x");
  Vector w;
  const double s2 = 1.0 - t * t;
  const double lse = Packed(mixture).posterior_weights(x.transpose(), t, w);
  return lse - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi * s2);
}

double interpolant_density(const AtomMixture& mixture, const Vector& x, double t) {
  return std::exp(log_interpolant_density(mixture, x, t));
}

double interpolant_density(const DiscreteConditionalTarget& target, const Vector& x, const Vector& y, double t) {
  return interpolant_density(*target.mixture(y), x, t);
}

Vector score_from_velocity(const Vector& x, double t, const Vector& velocity) {
  if (!(t > 0.0 && t < 1.0)) {
    throw Error("score_from_velocity: t must lie in (0, 1); at t = 0 only the velocity is defined");
  }
  require_dims(static_cast<std::size_t>(velocity.size()), static_cast<std::size_t>(x.size()), "score_from_velocity");
  return t * velocity - x;
}

double atom_quantile(const AtomMixture& mixture, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error("atom_quantile: p must lie in (0, 1)");
  }
  require_dims(mixture.dim(), 1, "atom_quantile");
  std::vector<std::pair<double, double>> sorted;
  for (const auto& a : mixture.atoms()) {
    sorted.emplace_back(a.location[0], a.weight);
  }
  std::sort(sorted.begin(), sorted.end());
  double cdf = 0.0;
  for (const auto& [u, w] : sorted) {
    cdf += w;
    if (cdf >= p) {
      return u;
    }
  }
  return sorted.back().first;
}

double interpolant_cdf(const AtomMixture& mixture, double x, double t) {
  require_time(t, "interpolant_cdf");
  require_dims(mixture.dim(), 1, "interpolant_cdf");
  const double s = std::sqrt(1.0 - t * t);
  double cdf = 0.0;
  for (const auto& a : mixture.atoms()) {
    cdf += a.weight * 0.5 * std::erfc(-(x - t * a.location[0]) / (s * std::numbers::sqrt2));
  }
  return cdf;
}

double interpolant_quantile(const AtomMixture& mixture, double t, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error("interpolant_quantile: p must lie in (0, 1)");
  }
  require_dims(mixture.dim(), 1, "interpolant_quantile");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& a : mixture.atoms()) {
    lo = std::min(lo, t * a.location[0]);
    hi = std::max(hi, t * a.location[0]);
  }
  const double s = std::sqrt(1.0 - t * t);
  lo -= 40.0 * s + 1.0;
  hi += 40.0 * s + 1.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (interpolant_cdf(mixture, mid, t) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

GaussianTarget::GaussianTarget(std::size_t dx, std::size_t dy, MeanFn mean, double sigma)
    : dx_(dx), dy_(dy), mean_(std::move(mean)), sigma_(sigma) {
  if (!(sigma > 0.0)) {
    throw Error("GaussianTarget: sigma must be positive");
  }
}

GaussianTarget GaussianTarget::constant(const Vector& mean, double sigma, std::size_t dy) {
  return GaussianTarget(static_cast<std::size_t>(mean.size()), dy, [mean](const Vector&) { return mean; }, sigma);
}

Matrix GaussianTarget::evaluate(const Matrix& x, const Matrix& y, double t) const {
  require_time(t, "GaussianTarget velocity");
  require_dims(static_cast<std::size_t>(x.cols()), dx_, "GaussianTarget x");
  if (y.rows() != 1 && y.rows() != x.rows()) {
    throw DimensionError("GaussianTarget: y must have one row or as many rows as x");
  }
  const double s2 = sigma_ * sigma_;
  const double d = t * t * s2 + 1.0 - t * t;
  Matrix out(x.rows(), x.cols());
  RowVector mu = mean_(y.row(0).transpose()).transpose();
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (y.rows() != 1) {
      mu = mean_(y.row(i).transpose()).transpose();
    }
    out.row(i) = (mu + t * (s2 - 1.0) * x.row(i)) / d;
  }
  return out;
}

DiscreteConditionalTarget parse_target(std::istream& in) {
  std::size_t dx = 0;
  std::size_t dy = 0;
  bool have_dx = false;
  bool have_dy = false;
  struct Block {
    Vector key;
    bool has_key = false;
    std::vector<Atom> atoms;
  };
  std::vector<Block> blocks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line == "[condition]") {
      if (!have_dx || !have_dy) {
        throw Error("target file line " + std::to_string(line_no) + ": dx and dy must precede conditions");
      }
      blocks.emplace_back();
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error("target file line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "dx" || key == "dy") {
      const auto nums = parse_numbers(value, line_no);
      if (nums.size() != 1 || nums[0] < 0 || nums[0] != std::floor(nums[0])) {
        throw Error("target file line " + std::to_string(line_no) + ": " + key + " must be a count");
      }
      (key == "dx" ? dx : dy) = static_cast<std::size_t>(nums[0]);
      (key == "dx" ? have_dx : have_dy) = true;
      continue;
    }
    if (blocks.empty()) {
      throw Error("target file line " + std::to_string(line_no) + ": '" + key + "' outside a [condition] block");
    }
    if (key == "y") {
      const auto nums = parse_numbers(value, line_no);
      if (nums.size() != dy) {
        throw Error("target file line " + std::to_string(line_no) + ": condition needs " + std::to_string(dy) +
                    " values");
      }
      blocks.back().key = Eigen::Map<const Vector>(nums.data(), static_cast<Eigen::Index>(nums.size()));
      blocks.back().has_key = true;
    } else if (key == "atom") {
      const auto colon = value.find(':');
      if (colon == std::string::npos) {
        throw Error("target file line " + std::to_string(line_no) + ": atom must be 'weight : location'");
      }
      const auto w = parse_numbers(value.substr(0, colon), line_no);
      const auto u = parse_numbers(value.substr(colon + 1), line_no);
      if (w.size() != 1 || u.size() != dx) {
        throw Error("target file line " + std::to_string(line_no) + ": atom needs one weight and " +
                    std::to_string(dx) + " coordinates");
      }
      blocks.back().atoms.push_back(
          {Eigen::Map<const Vector>(u.data(), static_cast<Eigen::Index>(u.size())), w[0]});
    } else {
      throw Error("target file line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (blocks.empty()) {
    throw Error("target file: no [condition] block");
  }
  if (dx < 1) {
    throw Error("target file: dx must be positive");
  }
  std::vector<std::pair<Vector, AtomMixture>> entries;
  for (auto& b : blocks) {
    if (dy > 0 && !b.has_key) {
      throw Error("target file: every condition block needs a y line when dy > 0");
    }
    entries.emplace_back(b.has_key ? b.key : Vector(0), AtomMixture(std::move(b.atoms)));
  }
  if (dy == 0 && entries.size() != 1) {
    throw Error("target file: dy = 0 allows exactly one condition block");
  }
  return DiscreteConditionalTarget::keyed(dy, std::move(entries));
}

DiscreteConditionalTarget load_target(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open target file: " + path);
  }
  return parse_target(in);
}

SelfConsistencyReport self_consistency(const DiscreteConditionalTarget& target, const Vector& y, double stop_time,
                                       std::size_t probes, RngStream& rng, double radius) {
  const auto mix = target.mixture(y);
  const std::size_t dx = target.x_dim();
  SelfConsistencyReport rep;
  rep.probes = probes;
  rep.lipschitz_bound = static_cast<double>(dx) / ((1.0 - stop_time) * (1.0 - stop_time));
  const Vector cond_mean = mix->mean();

  auto draw_point = [&] {
    Vector x(static_cast<Eigen::Index>(dx));
    for (auto& v : x) {
      v = rng.uniform(-radius, radius);
    }
    return x;
  };

  for (std::size_t p = 0; p < probes; ++p) {
    // Score route: central differences of log f_t.
    {
      const Vector x = draw_point();
      const double t = rng.uniform(0.05, 0.95);
      const double h = 1e-4 * std::sqrt(1.0 - t * t);
      Vector fd(static_cast<Eigen::Index>(dx));
      for (Eigen::Index j = 0; j < fd.size(); ++j) {
        Vector xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        fd[j] = (log_interpolant_density(*mix, xp, t) - log_interpolant_density(*mix, xm, t)) / (2.0 * h);
      }
      const Vector v = oracle_velocity(*mix, x, t);
      // v = (x + s) / t
      const Vector via_score = (x + fd) / t;
      const double scale = std::max(1.0, via_score.norm());
      rep.max_score_rel_error = std::max(rep.max_score_rel_error, (v - via_score).norm() / scale);
    }
    // Limit at t -> 0.
    {
      const Vector x = draw_point();
      rep.limit_error = std::max(rep.limit_error, (oracle_velocity(*mix, x, 1e-6) - cond_mean).norm());
    }
    // Lipschitz ratio in x on [0, T].
    {
      const Vector x1 = draw_point();
      Vector dir = gauss_vector(rng, dx);
      dir *= rng.uniform(1e-4, 0.5) / dir.norm();
      const Vector x2 = x1 + dir;
      const double t = rng.uniform(0.0, stop_time);
      const double ratio = (oracle_velocity(*mix, x1, t) - oracle_velocity(*mix, x2, t)).norm() / dir.norm();
      rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, ratio);
    }
  }
  return rep;
}

} // namespace follmer::oracle
