#include "follmer/experiment.hpp"

#include "follmer/oracle.hpp"
#include "follmer/rng.hpp"
#include "follmer/synthdata.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>

namespace follmer::cli {

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"seed", "name"}},
      {"data", {"source", "shape", "model", "path", "target", "n", "dx", "dy", "scale", "holdout"}},
      {"model",
       {"hidden", "fourier_features", "output_cap", "weight_cap", "lipschitz_x", "lipschitz_y", "lipschitz_t"}},
      {"train", {"epochs", "batch_size", "draws_per_example", "lr", "beta1", "beta2", "eps"}},
      {"flow", {"stop_time", "steps", "sde_steps"}},
      {"sample", {"count", "condition"}},
      {"distill", {"pairs", "hidden", "epochs", "batch_size", "lr", "condition", "count"}},
      {"eval", {"conditions", "tv_samples", "moment_samples", "n_star", "alpha", "grid_points", "sde"}},
      {"oracle", {"probes", "condition", "radius"}},
      {"output", {"dir", "plots"}},
      {"run", {"stages"}},
  };
  return keys;
}

std::string where(const IniFile& ini, const std::string& section, const std::string& key) {
  const auto& sec = ini.sections().at(section);
  const auto line = sec.at(key).line;
  return line ? ini.name() + ":" + std::to_string(line) : std::string("command line");
}

class Reader {
public:
  explicit Reader(const IniFile& ini) : ini_(ini) {}

  const std::string* raw(const std::string& s, const std::string& k) const { return ini_.find(s, k); }

  std::string text(const std::string& s, const std::string& k, std::string def) const {
    const auto* v = raw(s, k);
    return v ? *v : def;
  }

  std::size_t count(const std::string& s, const std::string& k, std::size_t def) const {
    const auto* v = raw(s, k);
    if (!v) return def;
    try {
      std::size_t used = 0;
      const long long x = std::stoll(*v, &used);
      if (used != v->size() || x < 0) throw std::invalid_argument(*v);
      return static_cast<std::size_t>(x);
    } catch (const std::exception&) {
      throw bad(s, k, "a non-negative integer");
    }
  }

  std::uint64_t u64(const std::string& s, const std::string& k, std::uint64_t def) const {
    const auto* v = raw(s, k);
    if (!v) return def;
    try {
      std::size_t used = 0;
      const unsigned long long x = std::stoull(*v, &used, 0);
      if (used != v->size() || v->front() == '-') throw std::invalid_argument(*v);
      return x;
    } catch (const std::exception&) {
      throw bad(s, k, "an unsigned 64-bit integer");
    }
  }

  double real(const std::string& s, const std::string& k, double def) const {
    const auto* v = raw(s, k);
    if (!v) return def;
    return parse_real(*v, s, k);
  }

  std::optional<double> cap(const std::string& s, const std::string& k) const {
    const auto* v = raw(s, k);
    if (!v || *v == "unbounded" || *v == "none") return std::nullopt;
    return parse_real(*v, s, k);
  }

  bool flag(const std::string& s, const std::string& k, bool def) const {
    const auto* v = raw(s, k);
    if (!v) return def;
    if (*v == "true" || *v == "yes" || *v == "on" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "off" || *v == "0") return false;
    throw bad(s, k, "a boolean");
  }

  std::vector<std::size_t> widths(const std::string& s, const std::string& k, std::vector<std::size_t> def) const {
    const auto* v = raw(s, k);
    if (!v) return def;
    std::vector<std::size_t> out;
    for (const auto& part : split(*v, ',')) {
      try {
        std::size_t used = 0;
        const long long x = std::stoll(part, &used);
        if (used != part.size() || x < 1) throw std::invalid_argument(part);
        out.push_back(static_cast<std::size_t>(x));
      } catch (const std::exception&) {
        throw bad(s, k, "a comma-separated list of positive widths");
      }
    }
    return out;
  }

  std::optional<Vector> vec(const std::string& s, const std::string& k) const {
    const auto* v = raw(s, k);
    if (!v) return std::nullopt;
    const auto parts = split(*v, ',');
    Vector out(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      out[static_cast<Eigen::Index>(i)] = parse_real(parts[i], s, k);
    }
    return out;
  }

private:
  double parse_real(const std::string& v, const std::string& s, const std::string& k) const {
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw bad(s, k, "a number");
    }
  }

  Error bad(const std::string& s, const std::string& k, const std::string& what) const {
    return Error(where(ini_, s, k) + ": [" + s + "] " + k + " must be " + what + " (got '" + *raw(s, k) + "')");
  }

  const IniFile& ini_;
};

bool has_stage(const std::vector<std::string>& stages, const std::string& s) {
  return std::find(stages.begin(), stages.end(), s) != stages.end();
}

} // namespace

const std::vector<std::string>& stage_order() {
  static const std::vector<std::string> order{"gen-data", "train",        "sample",         "sample-sde",  "distill",
                                              "eval-tv",  "eval-moments", "eval-intervals", "oracle-check"};
  return order;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

// Relative input paths written in a config file are taken relative to that file.
std::string input_path(const IniFile& ini, const std::string& section, const std::string& key) {
  const auto it = ini.sections().find(section);
  if (it == ini.sections().end()) return "";
  const auto e = it->second.find(key);
  if (e == it->second.end()) return "";
  const std::filesystem::path p(e->second.value);
  if (p.empty() || p.is_absolute() || e->second.line == 0 || !std::filesystem::is_regular_file(ini.name())) {
    return e->second.value;
  }
  return (std::filesystem::path(ini.name()).parent_path() / p).lexically_normal().string();
}

} // namespace

ExperimentConfig ExperimentConfig::from_ini(const IniFile& ini) {
  for (const auto& [section, entries] : ini.sections()) {
    const auto known = known_keys().find(section);
    if (known == known_keys().end()) {
      throw Error(ini.name() + ": unknown section [" + section + "]");
    }
    for (const auto& [key, entry] : entries) {
      if (!known->second.count(key)) {
        throw Error(where(ini, section, key) + ": unknown key '" + key + "' in [" + section + "]");
      }
    }
  }

  const Reader r(ini);
  ExperimentConfig c;
  c.canonical_text = ini.canonical();
  c.name = r.text("experiment", "name", c.name);
  c.seed = r.u64("experiment", "seed", c.seed);

  const std::string source = r.text("data", "source", "shape");
  if (source == "shape") {
    c.source = DataSource::shape;
  } else if (source == "regression") {
    c.source = DataSource::regression;
  } else if (source == "csv") {
    c.source = DataSource::csv;
  } else if (source == "target") {
    c.source = DataSource::target;
  } else {
    throw Error(where(ini, "data", "source") + ": [data] source must be shape, regression, csv or target");
  }
  c.shape = r.text("data", "shape", c.shape);
  c.model = r.text("data", "model", c.model);
  c.csv_path = input_path(ini, "data", "path");
  c.target_path = input_path(ini, "data", "target");
  c.n = r.count("data", "n", c.n);
  c.scale = r.flag("data", "scale", c.scale);
  c.holdout = r.real("data", "holdout", c.holdout);

  // Dimensions follow from the source; explicit values must agree.
  std::size_t dx = 1;
  std::size_t dy = 1;
  switch (c.source) {
  case DataSource::shape:
    synth::parse_shape(c.shape);
    break;
  case DataSource::regression:
    dy = synth::regression_cond_dim(synth::parse_model(c.model));
    break;
  case DataSource::csv:
    if (c.csv_path.empty()) {
      throw Error(ini.name() + ": [data] path is required for a csv source");
    }
    if (!std::filesystem::exists(c.csv_path)) {
      throw Error("csv file not found: " + c.csv_path);
    }
    if (!r.raw("data", "dx") || !r.raw("data", "dy")) {
      throw Error(ini.name() + ": [data] dx and dy are required for a csv source");
    }
    dx = r.count("data", "dx", 1);
    dy = r.count("data", "dy", 0);
    break;
  case DataSource::target: {
    if (c.target_path.empty()) {
      throw Error(ini.name() + ": [data] target is required for a target source");
    }
    if (!std::filesystem::exists(c.target_path)) {
      throw Error("target file not found: " + c.target_path);
    }
    const auto t = oracle::load_target(c.target_path);
    dx = t.x_dim();
    dy = t.cond_dim();
    break;
  }
  }
  if (r.count("data", "dx", dx) != dx || r.count("data", "dy", dy) != dy) {
    throw Error(ini.name() + ": [data] dx/dy (" + std::to_string(r.count("data", "dx", dx)) + ", " +
                std::to_string(r.count("data", "dy", dy)) + ") disagree with the data source (" +
                std::to_string(dx) + ", " + std::to_string(dy) + ")");
  }
  c.dx = dx;
  c.dy = dy;

  c.velocity_net = nn::MlpConfig::velocity(dx, dy, r.widths("model", "hidden", {256, 256, 256, 256}));
  c.velocity_net.fourier_features = r.count("model", "fourier_features", 0);
  c.velocity_net.output_cap = r.cap("model", "output_cap");
  c.velocity_net.weight_cap = r.cap("model", "weight_cap");
  c.velocity_net.lipschitz_x = r.cap("model", "lipschitz_x");
  c.velocity_net.lipschitz_y = r.cap("model", "lipschitz_y");
  c.velocity_net.lipschitz_t = r.cap("model", "lipschitz_t");

  c.stop_time = r.real("flow", "stop_time", c.stop_time);
  c.steps = r.count("flow", "steps", c.steps);
  c.sde_steps = r.count("flow", "sde_steps", c.sde_steps);

  c.train.epochs = r.count("train", "epochs", 200);
  c.train.batch_size = r.count("train", "batch_size", 128);
  c.train.draws_per_example = r.count("train", "draws_per_example", 1);
  c.train.adam.lr = r.real("train", "lr", 1e-3);
  c.train.adam.beta1 = r.real("train", "beta1", 0.9);
  c.train.adam.beta2 = r.real("train", "beta2", 0.999);
  c.train.adam.eps = r.real("train", "eps", 1e-8);
  c.train.stop_time = c.stop_time;

  c.sample_count = r.count("sample", "count", c.sample_count);
  c.sample_condition = r.vec("sample", "condition");

  c.distill_pairs = r.count("distill", "pairs", c.distill_pairs);
  c.generator_net = nn::MlpConfig::generator(dx, dy, r.widths("distill", "hidden", {128, 128, 128}));
  c.distill_train.epochs = r.count("distill", "epochs", 100);
  c.distill_train.batch_size = r.count("distill", "batch_size", 256);
  c.distill_train.adam.lr = r.real("distill", "lr", 1e-3);
  c.distill_train.stop_time = c.stop_time;
  c.distill_condition = r.vec("distill", "condition");
  c.distill_count = r.count("distill", "count", c.distill_count);

  c.eval_conditions = r.count("eval", "conditions", c.eval_conditions);
  c.tv_samples = r.count("eval", "tv_samples", c.tv_samples);
  c.moment_samples = r.count("eval", "moment_samples", c.moment_samples);
  c.n_star = r.count("eval", "n_star", c.n_star);
  c.alpha = r.real("eval", "alpha", c.alpha);
  c.grid_points = r.count("eval", "grid_points", c.grid_points);
  c.eval_sde = r.flag("eval", "sde", c.eval_sde);

  c.oracle_probes = r.count("oracle", "probes", c.oracle_probes);
  c.oracle_condition = r.vec("oracle", "condition");
  c.oracle_radius = r.real("oracle", "radius", c.oracle_radius);

  c.output_dir = r.text("output", "dir", c.output_dir);
  c.plots = r.flag("output", "plots", c.plots);

  const auto* stages = r.raw("run", "stages");
  if (stages) {
    for (const auto& s : split(*stages, ',')) {
      if (!has_stage(stage_order(), s)) {
        throw Error(where(ini, "run", "stages") + ": unknown stage '" + s + "'");
      }
      if (!has_stage(c.stages, s)) {
        c.stages.push_back(s);
      }
    }
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (!(stop_time > 0.0 && stop_time < 1.0)) {
    throw Error("[flow] stop_time must lie in (0, 1)");
  }
  if (steps < 1) {
    throw Error("[flow] steps must be at least 1");
  }
  if (n < 1) {
    throw Error("[data] n must be at least 1");
  }
  if (!(holdout >= 0.0 && holdout < 1.0)) {
    throw Error("[data] holdout must lie in [0, 1)");
  }
  if (scale && source != DataSource::csv) {
    throw Error("[data] scale applies to csv sources only");
  }
  velocity_net.validate();
  generator_net.validate();
  train.validate();
  distill_train.validate();
  auto check_condition = [&](const std::optional<Vector>& v, const char* what) {
    if (v && static_cast<std::size_t>(v->size()) != dy) {
      throw Error(std::string(what) + " has " + std::to_string(v->size()) + " values but dy = " + std::to_string(dy));
    }
  };
  check_condition(sample_condition, "[sample] condition");
  check_condition(distill_condition, "[distill] condition");
  check_condition(oracle_condition, "[oracle] condition");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error("[eval] alpha must lie in (0, 1)");
  }
  if (grid_points < 16) {
    throw Error("[eval] grid_points must be at least 16");
  }
  if (tv_samples < 2 || moment_samples < 2 || n_star < 2) {
    throw Error("[eval] sample counts must be at least 2");
  }

  const bool has_data = source != DataSource::target;
  for (const auto& s : stages) {
    if ((s == "gen-data" || s == "train") && !has_data) {
      throw Error("stage " + s + " needs a shape, regression or csv data source");
    }
    if (s == "eval-tv" && source != DataSource::shape) {
      throw Error("stage eval-tv needs [data] source = shape");
    }
    if (s == "eval-moments" && source != DataSource::regression) {
      throw Error("stage eval-moments needs [data] source = regression");
    }
    if (s == "eval-intervals" && source != DataSource::regression && !(source == DataSource::csv && holdout > 0.0)) {
      throw Error("stage eval-intervals needs a regression source or a csv source with [data] holdout > 0");
    }
    if (s == "oracle-check" && source != DataSource::target) {
      throw Error("stage oracle-check needs [data] source = target");
    }
    if ((s == "eval-tv" || s == "eval-moments" || s == "eval-intervals") && dx != 1) {
      throw Error("stage " + s + " needs dx = 1");
    }
    if (s == "sample-sde" && sde_flow().steps() < 2) {
      throw Error("stage sample-sde needs at least two steps");
    }
    if (s == "distill" && distill_pairs == 0) {
      throw Error("[distill] pairs must be positive");
    }
  }
  if (eval_sde && sde_flow().steps() < 2) {
    throw Error("[eval] sde needs at least two steps");
  }
}

std::string ExperimentConfig::config_hash() const {
  return hex64(fnv1a64(canonical_text));
}

std::string ExperimentConfig::resolved_output_dir() const {
  const char* root = std::getenv("FOLLMER_OUTPUT_ROOT");
  std::filesystem::path dir(output_dir);
  if (root && *root && dir.is_relative()) {
    dir = std::filesystem::path(root) / dir;
  }
  return dir.string();
}

std::uint64_t ExperimentConfig::stage_seed(std::uint64_t stage) const {
  return mix64(seed ^ mix64(stage * 0x9e3779b97f4a7c15ULL));
}

} // namespace follmer::cli
