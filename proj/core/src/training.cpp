#include "follmer/training.hpp"

#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

namespace follmer::train {

namespace {

// Stream ids below the seed; fixed so checkpoints record enough to rerun.
constexpr std::uint64_t kInitStream = 11;
constexpr std::uint64_t kBatchStream = 12;
constexpr std::uint64_t kDistillNoise = 21;
constexpr std::uint64_t kDistillConditions = 22;
constexpr std::uint64_t kDistillSplit = 23;
constexpr std::uint64_t kDistillInit = 24;
constexpr std::uint64_t kDistillBatch = 25;

void shuffle(std::vector<std::size_t>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

Matrix gather(const Matrix& m, const std::vector<std::size_t>& rows, std::size_t begin, std::size_t end) {
  Matrix out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i) {
    out.row(static_cast<Eigen::Index>(i - begin)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::string divergence_message(const char* what, std::size_t epoch, std::size_t step, double loss) {
  std::ostringstream os;
  os << what << ": non-finite loss " << loss << " at epoch " << epoch << ", step " << step;
  return os.str();
}

} // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) {
    throw Error("TrainConfig: batch_size must be at least 1");
  }
  if (draws_per_example < 1) {
    throw Error("TrainConfig: draws_per_example must be at least 1");
  }
  if (!(stop_time > 0.0 && stop_time < 1.0)) {
    throw Error("TrainConfig: stopping time must lie in (0, 1)");
  }
  if (!(adam.lr > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.eps > 0.0)) {
    throw Error("TrainConfig: invalid Adam hyperparameters");
  }
}

void LossTrace::write_csv(std::ostream& out) const {
  out << "epoch,mean_loss\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < epoch_loss.size(); ++i) {
    out << (i + 1) << ',' << epoch_loss[i] << '\n';
  }
  out.precision(old);
}

VelocityExample velocity_example(const Vector& x, const Vector& w, double t) {
  if (!(t >= 0.0 && t < 1.0)) {
    throw Error("velocity_example: t must lie in [0, 1)");
  }
  const double s = std::sqrt(1.0 - t * t);
  return {interpolant(x, w, t), x - (t / s) * w};
}

nn::Batch batch_for_rows(const Dataset& data, const std::vector<std::size_t>& rows, RngStream& rng,
                         double stop_time) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto dx = static_cast<Eigen::Index>(data.spec.dx);
  nn::Batch b;
  b.x.resize(n, dx);
  b.target.resize(n, dx);
  b.y.resize(n, static_cast<Eigen::Index>(data.spec.dy));
  b.t.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    const double t = rng.uniform(0.0, stop_time);
    const double s = std::sqrt(1.0 - t * t);
    const double ratio = t / s;
    for (Eigen::Index j = 0; j < dx; ++j) {
      const double w = rng.gaussian();
      const double x = data.xs(row, j);
      b.x(i, j) = t * x + s * w;
      b.target(i, j) = x - ratio * w;
    }
    b.y.row(i) = data.ys.row(row);
    b.t[i] = t;
  }
  return b;
}

nn::Batch make_batch(const Dataset& data, RngStream& rng, std::size_t batch_size, double stop_time) {
  if (data.empty()) {
    throw Error("make_batch: empty dataset");
  }
  if (!(stop_time > 0.0 && stop_time < 1.0)) {
    throw Error("make_batch: stopping time must lie in (0, 1)");
  }
  std::vector<std::size_t> rows(batch_size);
  for (auto& r : rows) {
    r = static_cast<std::size_t>(rng.below(data.size()));
  }
  return batch_for_rows(data, rows, rng, stop_time);
}

TrainResult train_velocity(const Dataset& data, const TrainConfig& config, const nn::MlpConfig& net_config,
                           const EpochCallback& on_epoch) {
  config.validate();
  data.validate();
  if (data.size() < config.batch_size) {
    throw Error("train_velocity: dataset has fewer rows than one batch");
  }
  if (net_config.x_dim != data.spec.dx || net_config.cond_dim != data.spec.dy || net_config.out_dim != data.spec.dx ||
      !net_config.time_input) {
    throw DimensionError("train_velocity: network shape does not match the dataset");
  }

  RngStream init(config.seed, kInitStream);
  RngStream rng(config.seed, kBatchStream);
  TrainResult result{{nn::Mlp::he_uniform(net_config, init), data.spec, config.stop_time}, {}};
  auto& net = result.model.net;

  std::vector<std::size_t> order;
  order.reserve(data.size() * config.draws_per_example);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order.clear();
    for (std::size_t r = 0; r < config.draws_per_example; ++r) {
      for (std::size_t i = 0; i < data.size(); ++i) {
        order.push_back(i);
      }
    }
    shuffle(order, rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
      const nn::Batch batch = batch_for_rows(data, rows, rng, config.stop_time);
      const auto lg = nn::loss_and_grad(net, batch);
      ++step;
      if (!std::isfinite(lg.loss)) {
        throw Error(divergence_message("train_velocity", epoch, step, lg.loss));
      }
      nn::adam_step(net, lg.grad, config.adam);
      total += lg.loss * static_cast<double>(end - begin);
    }
    const double mean = total / static_cast<double>(order.size());
    result.trace.epoch_loss.push_back(mean);
    if (on_epoch) {
      on_epoch(epoch, mean);
    }
  }
  return result;
}

double generator_rmse(const nn::Mlp& generator, const Matrix& z, const Matrix& y, const Matrix& target) {
  if (z.rows() == 0) {
    return 0.0;
  }
  const Matrix out = generator.forward(z, y, Vector());
  return std::sqrt((out - target).squaredNorm() / static_cast<double>(target.size()));
}

DistillResult distill(const flow::VelocityField& field, const FlowConfig& flow, const Matrix& conditions,
                      std::size_t pairs, const nn::MlpConfig& gen_config, const TrainConfig& config,
                      const EpochCallback& on_epoch) {
  config.validate();
  if (pairs == 0) {
    throw Error("distill: at least one noise/endpoint pair is required");
  }
  if (conditions.rows() < 1) {
    throw Error("distill: at least one condition row is required");
  }
  require_dims(static_cast<std::size_t>(conditions.cols()), field.cond_dim(), "distill conditions");
  if (gen_config.time_input || gen_config.x_dim != field.x_dim() || gen_config.out_dim != field.x_dim() ||
      gen_config.cond_dim != field.cond_dim()) {
    throw DimensionError("distill: generator must map (z, y) to a vector of size dx");
  }

  const auto n = static_cast<Eigen::Index>(pairs);
  const Matrix z = flow::initial_noise(RngStream(config.seed, kDistillNoise), pairs, field.x_dim());
  Matrix y(n, conditions.cols());
  if (conditions.rows() == 1) {
    y.rowwise() = conditions.row(0);
  } else {
    RngStream pick(config.seed, kDistillConditions);
    for (Eigen::Index i = 0; i < n; ++i) {
      y.row(i) = conditions.row(static_cast<Eigen::Index>(pick.below(static_cast<std::uint64_t>(conditions.rows()))));
    }
  }
  const Matrix endpoints = flow::euler_batch(field, y, flow, z);

  std::vector<std::size_t> perm(pairs);
  std::iota(perm.begin(), perm.end(), 0);
  RngStream split(config.seed, kDistillSplit);
  shuffle(perm, split);
  std::size_t n_hold = pairs / 10;
  if (pairs >= 2 && n_hold == 0) {
    n_hold = 1;
  }
  const std::size_t n_train = pairs - n_hold;

  const Matrix z_tr = gather(z, perm, 0, n_train);
  const Matrix y_tr = gather(y, perm, 0, n_train);
  const Matrix e_tr = gather(endpoints, perm, 0, n_train);
  const Matrix z_ho = gather(z, perm, n_train, pairs);
  const Matrix y_ho = gather(y, perm, n_train, pairs);
  const Matrix e_ho = gather(endpoints, perm, n_train, pairs);

  RngStream init(config.seed, kDistillInit);
  RngStream rng(config.seed, kDistillBatch);
  DistillResult result{nn::Mlp::he_uniform(gen_config, init), 0.0, 0.0, n_train, n_hold, {}};
  auto& net = result.generator;

  std::vector<std::size_t> order(n_train);
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < n_train; begin += config.batch_size) {
      const std::size_t end = std::min(n_train, begin + config.batch_size);
      nn::Batch batch;
      batch.x = gather(z_tr, order, begin, end);
      batch.y = gather(y_tr, order, begin, end);
      batch.target = gather(e_tr, order, begin, end);
      const auto lg = nn::loss_and_grad(net, batch);
      ++step;
      if (!std::isfinite(lg.loss)) {
        throw Error(divergence_message("distill", epoch, step, lg.loss));
      }
      nn::adam_step(net, lg.grad, config.adam);
      total += lg.loss * static_cast<double>(end - begin);
    }
    const double mean = total / static_cast<double>(n_train);
    result.trace.epoch_loss.push_back(mean);
    if (on_epoch) {
      on_epoch(epoch, mean);
    }
  }
  result.train_rmse = generator_rmse(net, z_tr, y_tr, e_tr);
  result.holdout_rmse = generator_rmse(net, z_ho, y_ho, e_ho);
  return result;
}

} // namespace follmer::train
