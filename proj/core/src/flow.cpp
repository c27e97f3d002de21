#include "follmer/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace follmer::flow {

namespace {

// Rows integrated together; bounds the activation memory of network fields.
constexpr Eigen::Index kChunkRows = 1024;

Matrix as_row(const Vector& v) {
  return v.transpose();
}

void check_finite(const Matrix& v, const Matrix& z, double t) {
  if (v.allFinite()) {
    return;
  }
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    if (!v.row(i).allFinite()) {
      throw NonFiniteVelocity(t, z.row(i).norm());
    }
  }
}

Matrix condition_block(const Matrix& y, Eigen::Index begin, Eigen::Index rows) {
  if (y.rows() == 1) {
    return y;
  }
  return y.middleRows(begin, rows);
}

void check_inputs(const VelocityField& field, const Matrix& y, Eigen::Index rows, Eigen::Index cols) {
  require_dims(static_cast<std::size_t>(cols), field.x_dim(), "sampler initial state");
  require_dims(static_cast<std::size_t>(y.cols()), field.cond_dim(), "sampler condition");
  if (y.rows() != 1 && y.rows() != rows) {
    throw DimensionError("sampler: condition must have one row or one row per sample");
  }
}

} // namespace

Vector VelocityField::evaluate(const Vector& x, const Vector& y, double t) const {
  return evaluate(as_row(x), as_row(y), t).row(0).transpose();
}

Matrix FunctionField::evaluate(const Matrix& x, const Matrix& y, double t) const {
  Matrix out(x.rows(), static_cast<Eigen::Index>(dx_));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Vector yi = (y.rows() == 1 ? y.row(0) : y.row(i)).transpose();
    out.row(i) = fn_(x.row(i).transpose(), yi, t).transpose();
  }
  return out;
}

NetworkField::NetworkField(const nn::Mlp& net) : net_(&net) {
  if (!net.config().time_input || net.config().out_dim != net.config().x_dim) {
    throw Error("NetworkField: network must take (x, y, t) and return a vector of size dx");
  }
}

Matrix NetworkField::evaluate(const Matrix& x, const Matrix& y, double t) const {
  return net_->forward(x, y, Vector::Constant(x.rows(), t));
}

NonFiniteVelocity::NonFiniteVelocity(double t, double state_norm)
    : Error([&] {
        std::ostringstream os;
        os << "non-finite velocity at t = " << t << " (|z|_2 = " << state_norm << ")";
        return os.str();
      }()),
      time_(t), state_norm_(state_norm) {}

Vector euler_sample(const VelocityField& field, const Vector& y, const FlowConfig& flow, const Vector& z0) {
  return euler_batch(field, as_row(y), flow, as_row(z0)).row(0).transpose();
}

SamplePath euler_path(const VelocityField& field, const Vector& y, const FlowConfig& flow, const Vector& z0) {
  const Matrix ym = as_row(y);
  Matrix z = as_row(z0);
  check_inputs(field, ym, 1, z.cols());
  SamplePath path;
  path.times = flow.grid();
  path.states.resize(static_cast<Eigen::Index>(flow.steps() + 1), z.cols());
  path.states.row(0) = z.row(0);
  const double dt = flow.step_size();
  for (std::size_t k = 0; k < flow.steps(); ++k) {
    const double t = flow.time(k);
    const Matrix v = field.evaluate(z, ym, t);
    check_finite(v, z, t);
    z += dt * v;
    path.states.row(static_cast<Eigen::Index>(k + 1)) = z.row(0);
  }
  return path;
}

Matrix euler_batch(const VelocityField& field, const Matrix& y, const FlowConfig& flow, Matrix z) {
  check_inputs(field, y, z.rows(), z.cols());
  const double dt = flow.step_size();
  for (Eigen::Index begin = 0; begin < z.rows(); begin += kChunkRows) {
    const Eigen::Index rows = std::min(kChunkRows, z.rows() - begin);
    Matrix block = z.middleRows(begin, rows);
    const Matrix yb = condition_block(y, begin, rows);
    for (std::size_t k = 0; k < flow.steps(); ++k) {
      const double t = flow.time(k);
      const Matrix v = field.evaluate(block, yb, t);
      check_finite(v, block, t);
      block += dt * v;
    }
    z.middleRows(begin, rows) = block;
  }
  return z;
}

Matrix initial_noise(const RngStream& rng, std::size_t count, std::size_t dx) {
  Matrix z(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dx));
  for (std::size_t i = 0; i < count; ++i) {
    RngStream row = rng.substream(i);
    for (std::size_t j = 0; j < dx; ++j) {
      z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row.gaussian();
    }
  }
  return z;
}

Matrix sample_batch(const VelocityField& field, const Vector& y, const FlowConfig& flow, std::size_t count,
                    const RngStream& rng) {
  if (count < 1) {
    throw Error("sample_batch: count must be at least 1");
  }
  return euler_batch(field, as_row(y), flow, initial_noise(rng, count, field.x_dim()));
}

Matrix sde_sample(const VelocityField& field, const Vector& y, const FlowConfig& flow, std::size_t count,
                  const RngStream& rng) {
  if (count < 1) {
    throw Error("sde_sample: count must be at least 1");
  }
  if (flow.steps() < 2) {
    throw Error("sde_sample: at least two steps are required");
  }
  const Matrix ym = as_row(y);
  const auto dx = static_cast<Eigen::Index>(field.x_dim());
  require_dims(static_cast<std::size_t>(ym.cols()), field.cond_dim(), "sde_sample condition");
  const double dt = flow.step_size();
  const auto total = static_cast<Eigen::Index>(count);
  Matrix out(total, dx);

  std::vector<RngStream> streams;
  for (Eigen::Index begin = 0; begin < total; begin += kChunkRows) {
    const Eigen::Index rows = std::min(kChunkRows, total - begin);
    streams.clear();
    Matrix z(rows, dx);
    for (Eigen::Index i = 0; i < rows; ++i) {
      streams.push_back(rng.substream(static_cast<std::uint64_t>(begin + i)));
      for (Eigen::Index j = 0; j < dx; ++j) {
        z(i, j) = streams.back().gaussian();
      }
    }
    {
      const Matrix v = field.evaluate(z, ym, 0.0);
      check_finite(v, z, 0.0);
      z += dt * v;
    }
    for (std::size_t k = 1; k < flow.steps(); ++k) {
      const double t = flow.time(k);
      const Matrix v = field.evaluate(z, ym, t);
      check_finite(v, z, t);
      const double noise_scale = std::sqrt(2.0 * dt / t);
      z = z + dt * (2.0 * v - z / t);
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < dx; ++j) {
          z(i, j) += noise_scale * streams[static_cast<std::size_t>(i)].gaussian();
        }
      }
    }
    out.middleRows(begin, rows) = z;
  }
  return out;
}

Matrix one_step_generate(const nn::Mlp& generator, const Vector& y, std::size_t count, const RngStream& rng) {
  const auto& c = generator.config();
  if (c.time_input || c.out_dim != c.x_dim) {
    throw Error("one_step_generate: generator must map (z, y) to a vector of size dx");
  }
  if (count == 0) {
    return Matrix(0, static_cast<Eigen::Index>(c.x_dim));
  }
  const Matrix z = initial_noise(rng, count, c.x_dim);
  return generator.forward(z, as_row(y), Vector());
}

} // namespace follmer::flow
