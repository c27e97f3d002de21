#include "follmer/pipeline.hpp"

#include "follmer/flow.hpp"
#include "follmer/oracle.hpp"
#include "follmer/protocols.hpp"
#include "follmer/svg.hpp"
#include "follmer/synthdata.hpp"
#include "follmer/training.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <ostream>
#include <sstream>

namespace follmer::cli {

namespace fs = std::filesystem;

namespace {

enum StageSeed : std::uint64_t {
  kData = 1,
  kTrain = 2,
  kSample = 3,
  kSampleSde = 4,
  kDistill = 5,
  kTv = 6,
  kMoments = 7,
  kIntervals = 8,
  kOracle = 9,
  kEvalCases = 10,
  kSplit = 11,
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) {
    throw Error("cannot write " + p);
  }
  out << text;
}

std::vector<double> column(const Matrix& m, Eigen::Index j) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = m(i, j);
  }
  return out;
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

struct Pipeline::State {
  std::optional<Dataset> data;    // full dataset, model scale
  std::optional<Dataset> fit;     // training rows
  std::optional<Dataset> holdout; // held-out rows
  synth::ScalingRecord scaling;
  std::optional<oracle::DiscreteConditionalTarget> target;
  std::optional<Checkpoint> model;
  std::unique_ptr<flow::NetworkField> model_field;
  std::optional<Checkpoint> generator;
};

Pipeline::Pipeline(ExperimentConfig config, std::ostream& log)
    : config_(std::move(config)), log_(log), dir_(config_.resolved_output_dir()), state_(std::make_unique<State>()) {
  config_.validate();
}

Pipeline::~Pipeline() = default;

std::string Pipeline::path(const std::string& file) const {
  return (fs::path(dir_) / file).string();
}

void Pipeline::record_output(const std::string& file) {
  if (std::find(outputs_.begin(), outputs_.end(), file) == outputs_.end()) {
    outputs_.push_back(file);
  }
}

void Pipeline::record_input(const std::string& p) {
  if (std::find(inputs_.begin(), inputs_.end(), p) == inputs_.end()) {
    inputs_.push_back(p);
  }
}

void Pipeline::run(const std::vector<std::string>& stages) {
  for (const auto& s : stages) {
    if (std::find(stage_order().begin(), stage_order().end(), s) == stage_order().end()) {
      throw Error("unknown stage '" + s + "'");
    }
  }
  ExperimentConfig probe = config_;
  probe.stages = stages;
  probe.validate();

  fs::create_directories(dir_);
  write_file(path("config.ini"), config_.canonical_text);
  record_output("config.ini");
  if (config_.source == DataSource::csv) {
    record_input(config_.csv_path);
  }
  if (config_.source == DataSource::target) {
    record_input(config_.target_path);
  }
  std::vector<std::string> ordered;
  for (const auto& s : stage_order()) {
    if (std::find(stages.begin(), stages.end(), s) != stages.end()) {
      ordered.push_back(s);
    }
  }
  for (const auto& s : ordered) {
    stage(s);
  }
  write_outputs(ordered);
}

void Pipeline::stage(const std::string& name) {
  log_ << "[" << name << "]\n" << std::flush;
  if (name == "gen-data") gen_data();
  else if (name == "train") train();
  else if (name == "sample") sample(false);
  else if (name == "sample-sde") sample(true);
  else if (name == "distill") distill();
  else if (name == "eval-tv") eval_tv();
  else if (name == "eval-moments") eval_moments();
  else if (name == "eval-intervals") eval_intervals();
  else if (name == "oracle-check") oracle_check();
}

namespace {

// Loads or regenerates the dataset and its train/holdout split.
void ensure_data(const ExperimentConfig& c, std::optional<Dataset>& data, std::optional<Dataset>& fit,
                 std::optional<Dataset>& holdout, synth::ScalingRecord& scaling) {
  if (data) {
    return;
  }
  switch (c.source) {
  case DataSource::shape:
    data = synth::gen_shape({synth::parse_shape(c.shape), c.n, c.stage_seed(kData)});
    scaling = synth::ScalingRecord::identity(data->spec);
    break;
  case DataSource::regression:
    data = synth::gen_regression({synth::parse_model(c.model), c.n, c.stage_seed(kData)});
    scaling = synth::ScalingRecord::identity(data->spec);
    break;
  case DataSource::csv: {
    auto [d, rec] = synth::load_csv(c.csv_path, c.dx, c.dy, c.scale);
    data = std::move(d);
    scaling = std::move(rec);
    break;
  }
  case DataSource::target:
    throw Error("no dataset for a target source");
  }
  const std::size_t n = data->size();
  const auto n_hold = static_cast<std::size_t>(c.holdout * static_cast<double>(n));
  if (n_hold == 0) {
    fit = data;
    return;
  }
  if (n_hold >= n) {
    throw Error("[data] holdout leaves no training rows");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  RngStream rng(c.stage_seed(kSplit));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(perm[i - 1], perm[static_cast<std::size_t>(rng.below(i))]);
  }
  const std::vector<std::size_t> fit_rows(perm.begin(), perm.end() - static_cast<std::ptrdiff_t>(n_hold));
  const std::vector<std::size_t> hold_rows(perm.end() - static_cast<std::ptrdiff_t>(n_hold), perm.end());
  fit = Dataset(data->spec, take_rows(data->xs, fit_rows), take_rows(data->ys, fit_rows));
  holdout = Dataset(data->spec, take_rows(data->xs, hold_rows), take_rows(data->ys, hold_rows));
}

} // namespace

void Pipeline::gen_data() {
  const auto t0 = std::chrono::steady_clock::now();
  auto& st = *state_;
  ensure_data(config_, st.data, st.fit, st.holdout, st.scaling);
  synth::save_csv(path("data.csv"), st.scaling.invert(*st.data));
  record_output("data.csv");
  if (config_.plots && st.data->spec.dy >= 1) {
    std::ofstream svg(path("data.svg"));
    write_scatter_svg(svg, {{"data", "#1f77b4", column(st.data->xs, 0), column(st.data->ys, 0)}},
                      config_.name + ": data");
    record_output("data.svg");
  }
  report_.add("data_rows", static_cast<double>(st.data->size()), 0.0, seconds_since(t0));
}

void Pipeline::train() {
  const auto t0 = std::chrono::steady_clock::now();
  auto& st = *state_;
  ensure_data(config_, st.data, st.fit, st.holdout, st.scaling);
  train::TrainConfig tc = config_.train;
  tc.seed = config_.stage_seed(kTrain);
  const std::size_t every = std::max<std::size_t>(1, tc.epochs / 10);
  auto result = train::train_velocity(*st.fit, tc, config_.velocity_net, [&](std::size_t epoch, double loss) {
    if (epoch % every == 0 || epoch == tc.epochs) {
      log_ << "  epoch " << epoch << "/" << tc.epochs << "  loss " << loss << '\n' << std::flush;
    }
  });
  {
    std::ofstream out(path("loss.csv"), std::ios::binary);
    result.trace.write_csv(out);
  }
  record_output("loss.csv");
  Checkpoint ck;
  ck.kind = ModelKind::velocity;
  ck.spec = st.fit->spec;
  ck.scaling = st.scaling;
  ck.net = std::move(result.model.net);
  ck.stop_time = config_.stop_time;
  ck.seed = config_.seed;
  save_checkpoint(ck, path("model.ckpt"));
  record_output("model.ckpt");
  st.model = std::move(ck);
  st.model_field.reset();
  report_.add("train_final_loss", result.trace.epoch_loss.back(), 0.0, seconds_since(t0));
}

namespace {

const flow::VelocityField& obtain_field(const ExperimentConfig& c, const std::string& model_path,
                                        std::optional<oracle::DiscreteConditionalTarget>& target,
                                        std::optional<Checkpoint>& model,
                                        std::unique_ptr<flow::NetworkField>& model_field, bool& loaded) {
  loaded = false;
  if (c.source == DataSource::target) {
    if (!target) {
      target = oracle::load_target(c.target_path);
    }
    return *target;
  }
  if (!model) {
    if (!fs::exists(model_path)) {
      throw Error("trained model not found: " + model_path + " (run the train stage first)");
    }
    model = load_checkpoint(model_path);
    loaded = true;
    if (model->kind != ModelKind::velocity) {
      throw Error(model_path + " does not hold a velocity model");
    }
    if (model->spec.dx != c.dx || model->spec.dy != c.dy) {
      throw Error(model_path + " was trained for different dimensions");
    }
    if (model->stop_time != c.stop_time) {
      throw Error(model_path + " was trained with stop_time " + fmt(model->stop_time) +
                  ", the config asks for " + fmt(c.stop_time));
    }
  }
  if (!model_field) {
    model_field = std::make_unique<flow::NetworkField>(model->net);
  }
  return *model_field;
}

synth::ScalingRecord active_scaling(const ExperimentConfig& c, const std::optional<Checkpoint>& model) {
  if (c.source == DataSource::target || !model) {
    return synth::ScalingRecord::identity(DataSpec{c.dx, c.dy, {}, {}});
  }
  return model->scaling;
}

Vector scaled_condition(const synth::ScalingRecord& sc, const Vector& y) {
  return sc.apply_y(Matrix(y.transpose())).row(0).transpose();
}

} // namespace

void Pipeline::sample(bool sde) {
  const auto t0 = std::chrono::steady_clock::now();
  auto& st = *state_;
  bool loaded = false;
  const auto& field = obtain_field(config_, path("model.ckpt"), st.target, st.model, st.model_field, loaded);
  if (loaded) record_input(path("model.ckpt"));
  const auto sc = active_scaling(config_, st.model);
  const std::string stem = sde ? "samples_sde" : "samples";
  const RngStream rng(config_.stage_seed(sde ? kSampleSde : kSample));
  const FlowConfig flow = sde ? config_.sde_flow() : config_.flow();

  const bool joint = !config_.sample_condition && config_.source != DataSource::target;
  std::ofstream out(path(stem + ".csv"), std::ios::binary);
  if (joint) {
    ensure_data(config_, st.data, st.fit, st.holdout, st.scaling);
    const auto rows = static_cast<Eigen::Index>(std::min<std::size_t>(config_.sample_count, st.fit->size()));
    const Matrix ys = st.fit->ys.topRows(rows);
    Matrix xs(rows, static_cast<Eigen::Index>(config_.dx));
    if (sde) {
      // Each row has its own condition; the SDE sampler takes one y per call.
      for (Eigen::Index i = 0; i < rows; ++i) {
        xs.row(i) = flow::sde_sample(field, ys.row(i).transpose(), flow, 1, rng.substream(static_cast<std::uint64_t>(i)))
                        .row(0);
      }
    } else {
      xs = flow::euler_batch(field, ys, flow, flow::initial_noise(rng, static_cast<std::size_t>(rows), config_.dx));
    }
    const Dataset gen(st.fit->spec, sc.invert_x(xs), sc.invert_y(ys));
    synth::write_csv(out, gen);
    if (config_.plots && config_.dy >= 1) {
      const Matrix tx = sc.invert_x(st.fit->xs.topRows(rows));
      std::ofstream svg(path(stem + ".svg"));
      write_scatter_svg(svg,
                        {{"training", "#1f77b4", column(tx, 0), column(gen.ys, 0)},
                         {sde ? "generated (SDE)" : "generated (ODE)", "#d62728", column(gen.xs, 0), column(gen.ys, 0)}},
                        config_.name + ": " + (sde ? "SDE" : "ODE") + " samples");
      record_output(stem + ".svg");
    }
  } else {
    const Vector y = config_.sample_condition ? scaled_condition(sc, *config_.sample_condition)
                                              : Vector::Zero(static_cast<Eigen::Index>(config_.dy));
    const Matrix xs = sde ? flow::sde_sample(field, y, flow, config_.sample_count, rng)
                          : flow::sample_batch(field, y, flow, config_.sample_count, rng);
    synth::write_matrix_csv(out, sc.invert_x(xs));
  }
  out.close();
  record_output(stem + ".csv");
  report_.add(sde ? "sample_sde_count" : "sample_count",
              static_cast<double>(joint ? std::min<std::size_t>(config_.sample_count, state_->fit->size())
                                        : config_.sample_count),
              0.0, seconds_since(t0));
}

void Pipeline::distill() {
  const auto t0 = std::chrono::steady_clock::now();
  auto& st = *state_;
  bool loaded = false;
  const auto& field = obtain_field(config_, path("model.ckpt"), st.target, st.model, st.model_field, loaded);
  if (loaded) record_input(path("model.ckpt"));

  const auto sc = active_scaling(config_, st.model);
  Matrix conditions;
  if (config_.distill_condition) {
    conditions = scaled_condition(sc, *config_.distill_condition).transpose();
  } else if (config_.source != DataSource::target) {
    ensure_data(config_, st.data, st.fit, st.holdout, st.scaling);
    conditions = st.fit->ys;
  } else {
    conditions = Matrix::Zero(1, static_cast<Eigen::Index>(config_.dy));
  }
  train::TrainConfig tc = config_.distill_train;
  tc.seed = config_.stage_seed(kDistill);
  const std::size_t every = std::max<std::size_t>(1, tc.epochs / 5);
  auto result = train::distill(field, config_.flow(), conditions, config_.distill_pairs, config_.generator_net, tc,
                               [&](std::size_t epoch, double loss) {
                                 if (epoch % every == 0 || epoch == tc.epochs) {
                                   log_ << "  epoch " << epoch << "/" << tc.epochs << "  loss " << loss << '\n'
                                        << std::flush;
                                 }
                               });
  {
    std::ofstream out(path("distill_loss.csv"), std::ios::binary);
    result.trace.write_csv(out);
  }
  record_output("distill_loss.csv");

  Checkpoint ck;
  ck.kind = ModelKind::generator;
  ck.spec = DataSpec{config_.dx, config_.dy, {}, {}};
  ck.scaling = sc;
  ck.net = result.generator;
  ck.stop_time = config_.stop_time;
  ck.seed = config_.seed;
  save_checkpoint(ck, path("generator.ckpt"));
  record_output("generator.ckpt");

  // One-step draws at the distillation conditions.
  const RngStream rng(config_.stage_seed(kDistill) ^ 0x5bd1e995ULL);
  const auto rows = static_cast<Eigen::Index>(conditions.rows() == 1 ? config_.distill_count
                                                                      : std::min<std::size_t>(config_.distill_count,
                                                                                              static_cast<std::size_t>(conditions.rows())));
  Matrix ys(rows, conditions.cols());
  if (conditions.rows() == 1) {
    ys.rowwise() = conditions.row(0);
  } else {
    ys = conditions.topRows(rows);
  }
  const Matrix z = flow::initial_noise(rng, static_cast<std::size_t>(rows), config_.dx);
  const Matrix xs = result.generator.forward(z, ys, Vector());
  {
    std::ofstream out(path("generated.csv"), std::ios::binary);
    synth::write_csv(out, Dataset(ck.spec, ck.scaling.invert_x(xs), ck.scaling.invert_y(ys)));
  }
  record_output("generated.csv");
  st.generator = std::move(ck);
  const double secs = seconds_since(t0);
  report_.add("distill_train_rmse", result.train_rmse, 0.0, secs);
  report_.add("distill_holdout_rmse", result.holdout_rmse, 0.0, secs);
}

void Pipeline::eval_tv() {
  const auto t0 = std::chrono::steady_clock::now();
  auto& st = *state_;
  bool loaded = false;
  const auto& field = obtain_field(config_, path("model.ckpt"), st.target, st.model, st.model_field, loaded);
  if (loaded) record_input(path("model.ckpt"));
  const auto shape = synth::parse_shape(config_.shape);
  const Dataset cases = synth::gen_shape({shape, config_.eval_conditions, config_.stage_seed(kEvalCases)});
  const std::vector<double> ys = column(cases.ys, 0);

  const auto ode = eval::tv_protocol(eval::ode_sampler(field, config_.flow(), config_.stage_seed(kTv), 0), shape, ys,
                                     config_.tv_samples, config_.grid_points);
  report_.add("tv_ode", ode.mean, ode.std, seconds_since(t0));
  std::optional<eval::TvSummary> sde;
  if (config_.eval_sde) {
    const auto t1 = std::chrono::steady_clock::now();
    sde = eval::tv_protocol(eval::sde_sampler(field, config_.sde_flow(), config_.stage_seed(kTv), 1), shape, ys,
                            config_.tv_samples, config_.grid_points);
    report_.add("tv_sde", sde->mean, sde->std, seconds_since(t1));
  }
  std::ofstream out(path("tv.csv"), std::ios::binary);
  out << "index,y,tv_ode" << (sde ? ",tv_sde" : "") << '\n';
  for (std::size_t i = 0; i < ys.size(); ++i) {
    out << i << ',' << fmt(ys[i]) << ',' << fmt(ode.tv[i]);
    if (sde) out << ',' << fmt(sde->tv[i]);
    out << '\n';
  }
  record_output("tv.csv");
}

void Pipeline::eval_moments() {
  const auto t0 = std::chrono::steady_clock::now();
  auto& st = *state_;
  bool loaded = false;
  const auto& field = obtain_field(config_, path("model.ckpt"), st.target, st.model, st.model_field, loaded);
  if (loaded) record_input(path("model.ckpt"));
  const auto model = synth::parse_model(config_.model);
  Matrix conditions(static_cast<Eigen::Index>(config_.eval_conditions),
                    static_cast<Eigen::Index>(synth::regression_cond_dim(model)));
  const RngStream base(config_.stage_seed(kEvalCases));
  for (Eigen::Index i = 0; i < conditions.rows(); ++i) {
    RngStream r = base.substream(static_cast<std::uint64_t>(i));
    conditions.row(i) = synth::draw_condition(model, r).transpose();
  }
  const auto ode = eval::moment_protocol(eval::ode_sampler(field, config_.flow(), config_.stage_seed(kMoments), 0),
                                         model, conditions, config_.moment_samples);
  const double secs = seconds_since(t0);
  report_.add("mse1_ode", ode.errors.mse_mean, 0.0, secs);
  report_.add("mse2_ode", ode.errors.mse_std, 0.0, secs);
  std::optional<eval::MomentSummary> sde;
  if (config_.eval_sde) {
    const auto t1 = std::chrono::steady_clock::now();
    sde = eval::moment_protocol(eval::sde_sampler(field, config_.sde_flow(), config_.stage_seed(kMoments), 1), model,
                                conditions, config_.moment_samples);
    report_.add("mse1_sde", sde->errors.mse_mean, 0.0, seconds_since(t1));
    report_.add("mse2_sde", sde->errors.mse_std, 0.0, seconds_since(t1));
  }
  std::ofstream out(path("moments.csv"), std::ios::binary);
  out << "index,true_mean,true_std,mean_ode,std_ode" << (sde ? ",mean_sde,std_sde" : "") << '\n';
  for (std::size_t i = 0; i < ode.est_mean.size(); ++i) {
    out << i << ',' << fmt(ode.true_mean[i]) << ',' << fmt(ode.true_std[i]) << ',' << fmt(ode.est_mean[i]) << ','
        << fmt(ode.est_std[i]);
    if (sde) out << ',' << fmt(sde->est_mean[i]) << ',' << fmt(sde->est_std[i]);
    out << '\n';
  }
  record_output("moments.csv");
}

void Pipeline::eval_intervals() {
  const auto t0 = std::chrono::steady_clock::now();
  auto& st = *state_;
  bool loaded = false;
  const auto& field = obtain_field(config_, path("model.ckpt"), st.target, st.model, st.model_field, loaded);
  if (loaded) record_input(path("model.ckpt"));
  Matrix conditions;
  std::vector<double> truths;
  if (config_.source == DataSource::regression) {
    const auto model = synth::parse_model(config_.model);
    conditions.resize(static_cast<Eigen::Index>(config_.eval_conditions),
                      static_cast<Eigen::Index>(synth::regression_cond_dim(model)));
    const RngStream base(config_.stage_seed(kEvalCases));
    for (Eigen::Index i = 0; i < conditions.rows(); ++i) {
      RngStream r = base.substream(static_cast<std::uint64_t>(i));
      const Vector y = synth::draw_condition(model, r);
      conditions.row(i) = y.transpose();
      truths.push_back(synth::draw_conditional(model, y, r));
    }
  } else {
    ensure_data(config_, st.data, st.fit, st.holdout, st.scaling);
    conditions = st.holdout->ys;
    truths = column(st.holdout->xs, 0);
  }
  const auto ode = eval::interval_protocol(eval::ode_sampler(field, config_.flow(), config_.stage_seed(kIntervals), 0),
                                           conditions, truths, config_.n_star, config_.alpha);
  report_.add("coverage_ode", ode.rate, 0.0, seconds_since(t0));
  std::optional<eval::IntervalReport> sde;
  if (config_.eval_sde) {
    const auto t1 = std::chrono::steady_clock::now();
    sde = eval::interval_protocol(eval::sde_sampler(field, config_.sde_flow(), config_.stage_seed(kIntervals), 1),
                                  conditions, truths, config_.n_star, config_.alpha);
    report_.add("coverage_sde", sde->rate, 0.0, seconds_since(t1));
  }
  std::ofstream out(path("intervals.csv"), std::ios::binary);
  out << "index,truth,lower_ode,upper_ode,hit_ode" << (sde ? ",lower_sde,upper_sde,hit_sde" : "") << '\n';
  for (std::size_t i = 0; i < truths.size(); ++i) {
    out << i << ',' << fmt(truths[i]) << ',' << fmt(ode.intervals[i].lo) << ',' << fmt(ode.intervals[i].hi) << ','
        << (ode.hits[i] ? 1 : 0);
    if (sde) {
      out << ',' << fmt(sde->intervals[i].lo) << ',' << fmt(sde->intervals[i].hi) << ',' << (sde->hits[i] ? 1 : 0);
    }
    out << '\n';
  }
  record_output("intervals.csv");
}

void Pipeline::oracle_check() {
  const auto t0 = std::chrono::steady_clock::now();
  auto& st = *state_;
  if (!st.target) {
    st.target = oracle::load_target(config_.target_path);
  }
  const Vector y = config_.oracle_condition ? *config_.oracle_condition
                                            : Vector::Zero(static_cast<Eigen::Index>(config_.dy));
  RngStream rng(config_.stage_seed(kOracle));
  const auto rep = oracle::self_consistency(*st.target, y, config_.stop_time, config_.oracle_probes, rng,
                                            config_.oracle_radius);
  const double secs = seconds_since(t0);
  report_.add("oracle_score_rel_error", rep.max_score_rel_error, 0.0, secs);
  report_.add("oracle_limit_error", rep.limit_error, 0.0, secs);
  report_.add("oracle_lipschitz_ratio", rep.max_lipschitz_ratio, 0.0, secs);
  report_.add("oracle_lipschitz_bound", rep.lipschitz_bound, 0.0, secs);
}

void Pipeline::write_outputs(const std::vector<std::string>& stages) {
  {
    std::ofstream out(path("metrics.csv"), std::ios::binary);
    report_.write_csv(out);
  }
  record_output("metrics.csv");
  {
    std::ofstream out(path("summary.txt"), std::ios::binary);
    out << config_.name << " (config " << config_.config_hash() << ", seed " << config_.seed << ")\n";
    report_.write_summary(out);
  }
  record_output("summary.txt");

  std::ostringstream m;
  m << "# follmer run manifest\n";
  m << "name = " << config_.name << '\n';
  m << "config_hash = " << config_.config_hash() << '\n';
  m << "seed = " << config_.seed << '\n';
  m << "stages =";
  for (std::size_t i = 0; i < stages.size(); ++i) {
    m << (i ? ", " : " ") << stages[i];
  }
  m << '\n';
  for (const auto& in : inputs_) {
    m << "input " << in << " fnv1a64=" << hex64(fnv1a64(read_file(in))) << '\n';
  }
  for (const auto& out : outputs_) {
    m << "output " << out << " fnv1a64=" << hex64(fnv1a64(read_file(path(out)))) << '\n';
  }
  write_file(path("manifest.txt"), m.str());
  report_.write_summary(log_);
  log_ << "outputs written to " << dir_ << '\n';
}

int run_experiment(const ExperimentConfig& config, const std::vector<std::string>& stages, std::ostream& log) {
  Pipeline p(config, log);
  p.run(stages);
  return 0;
}

} // namespace follmer::cli
