#include "follmer/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace follmer::nn {

MlpConfig MlpConfig::velocity(std::size_t dx, std::size_t dy, std::vector<std::size_t> hidden) {
  MlpConfig c;
  c.x_dim = dx;
  c.cond_dim = dy;
  c.time_input = true;
  c.hidden = std::move(hidden);
  c.out_dim = dx;
  return c;
}

MlpConfig MlpConfig::generator(std::size_t dx, std::size_t dy, std::vector<std::size_t> hidden) {
  MlpConfig c = velocity(dx, dy, std::move(hidden));
  c.time_input = false;
  return c;
}

std::size_t MlpConfig::time_width() const {
  return time_input ? 1 + 2 * fourier_features : 0;
}

std::size_t MlpConfig::max_width() const {
  return hidden.empty() ? 0 : *std::max_element(hidden.begin(), hidden.end());
}

std::size_t MlpConfig::parameter_count() const {
  std::size_t count = 0;
  std::size_t fan_in = input_width();
  for (std::size_t w : hidden) {
    count += w * (fan_in + 1);
    fan_in = w;
  }
  return count + out_dim * (fan_in + 1);
}

void MlpConfig::validate() const {
  if (x_dim < 1 || out_dim < 1) {
    throw Error("MlpConfig: x_dim and out_dim must be positive");
  }
  if (!time_input && fourier_features > 0) {
    throw Error("MlpConfig: Fourier time features need a time input");
  }
  for (std::size_t w : hidden) {
    if (w < 1) {
      throw Error("MlpConfig: every hidden width must be at least 1");
    }
  }
  if (output_cap && !(*output_cap > 0.0)) {
    throw Error("MlpConfig: output cap K must be positive");
  }
  if (weight_cap && !(*weight_cap > 0.0)) {
    throw Error("MlpConfig: weight cap kappa must be positive");
  }
}

namespace {

std::vector<Layer> zero_layers(const MlpConfig& c) {
  std::vector<Layer> layers;
  std::size_t fan_in = c.input_width();
  auto add = [&](std::size_t out) {
    Layer l;
    l.weight = Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(fan_in));
    l.bias = RowVector::Zero(static_cast<Eigen::Index>(out));
    layers.push_back(std::move(l));
    fan_in = out;
  };
  for (std::size_t w : c.hidden) {
    add(w);
  }
  add(c.out_dim);
  return layers;
}

// Radial projection onto the K-ball, row by row.
void project_rows(Matrix& out, const std::optional<double>& cap) {
  if (!cap) {
    return;
  }
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double r = out.row(i).norm();
    if (r > *cap) {
      out.row(i) *= *cap / r;
    }
  }
}

void dense(const Matrix& in, const Layer& layer, Matrix& out) {
  out.noalias() = in * layer.weight.transpose();
  out.rowwise() += layer.bias;
}

} // namespace

Mlp::Mlp(MlpConfig config) : config_(std::move(config)) {
  config_.validate();
  layers_ = zero_layers(config_);
}

Mlp Mlp::he_uniform(MlpConfig config, RngStream& rng) {
  Mlp net(std::move(config));
  for (auto& layer : net.layers_) {
    const double bound = std::sqrt(6.0 / static_cast<double>(layer.weight.cols()));
    double* w = layer.weight.data();
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      w[i] = rng.uniform(-bound, bound);
    }
  }
  if (net.config_.weight_cap) {
    const double k = *net.config_.weight_cap;
    for (auto& layer : net.layers_) {
      layer.weight = layer.weight.cwiseMax(-k).cwiseMin(k);
    }
  }
  return net;
}

Matrix Mlp::assemble(const Matrix& x, const Matrix& y, const Vector& t) const {
  const Eigen::Index n = x.rows();
  require_dims(static_cast<std::size_t>(x.cols()), config_.x_dim, "Mlp input x");
  require_dims(static_cast<std::size_t>(y.cols()), config_.cond_dim, "Mlp input y");
  const bool broadcast = y.rows() == 1 && n != 1;
  if (!broadcast && y.rows() != n) {
    throw DimensionError("Mlp input: y must have one row or as many rows as x");
  }
  if (config_.time_input) {
    if (t.size() != n) {
      throw DimensionError("Mlp input: one time value per row is required");
    }
  }
  const auto dx = static_cast<Eigen::Index>(config_.x_dim);
  const auto dy = static_cast<Eigen::Index>(config_.cond_dim);
  Matrix in(n, static_cast<Eigen::Index>(config_.input_width()));
  in.leftCols(dx) = x;
  if (dy > 0) {
    if (broadcast) {
      in.middleCols(dx, dy).rowwise() = y.row(0);
    } else {
      in.middleCols(dx, dy) = y;
    }
  }
  if (config_.time_input) {
    const Eigen::Index c0 = dx + dy;
    in.col(c0) = t;
    for (std::size_t j = 0; j < config_.fourier_features; ++j) {
      const double freq = std::ldexp(std::numbers::pi, static_cast<int>(j));
      const auto cj = c0 + 1 + 2 * static_cast<Eigen::Index>(j);
      for (Eigen::Index i = 0; i < n; ++i) {
        in(i, cj) = std::sin(freq * t[i]);
        in(i, cj + 1) = std::cos(freq * t[i]);
      }
    }
  }
  return in;
}

Matrix Mlp::forward(const Matrix& inputs) const {
  require_dims(static_cast<std::size_t>(inputs.cols()), config_.input_width(), "Mlp::forward inputs");
  Matrix h = inputs;
  Matrix next;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    dense(h, layers_[l], next);
    h = next.cwiseMax(0.0);
  }
  dense(h, layers_.back(), next);
  project_rows(next, config_.output_cap);
  return next;
}

Matrix Mlp::forward(const Matrix& x, const Matrix& y, const Vector& t) const {
  return forward(assemble(x, y, t));
}

Vector Mlp::forward(const Vector& x, const Vector& y, double t) const {
  if (config_.time_input && !(t >= 0.0 && t <= 1.0)) {
    throw Error("Mlp::forward: t must lie in [0, 1]");
  }
  Matrix xm = x.transpose();
  Matrix ym = y.transpose();
  Vector tv;
  if (config_.time_input) {
    tv = Vector::Constant(1, t);
  }
  const Matrix out = forward(xm, ym, tv);
  return out.row(0).transpose();
}

std::vector<double> Mlp::flatten() const {
  std::vector<double> flat;
  flat.reserve(config_.parameter_count());
  for (const auto& layer : layers_) {
    flat.insert(flat.end(), layer.weight.data(), layer.weight.data() + layer.weight.size());
    flat.insert(flat.end(), layer.bias.data(), layer.bias.data() + layer.bias.size());
  }
  return flat;
}

void Mlp::unflatten(const std::vector<double>& values) {
  require_dims(values.size(), config_.parameter_count(), "Mlp::unflatten");
  std::size_t pos = 0;
  for (auto& layer : layers_) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), layer.weight.size(), layer.weight.data());
    pos += static_cast<std::size_t>(layer.weight.size());
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), layer.bias.size(), layer.bias.data());
    pos += static_cast<std::size_t>(layer.bias.size());
  }
}

double Mlp::max_abs_parameter() const {
  double m = 0.0;
  for (const auto& layer : layers_) {
    m = std::max({m, layer.weight.cwiseAbs().maxCoeff(), layer.bias.cwiseAbs().maxCoeff()});
  }
  return m;
}

LossAndGrad loss_and_grad(const Mlp& net, const Batch& batch) {
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (n == 0) {
    throw Error("loss_and_grad: empty batch");
  }
  if (batch.target.rows() != n) {
    throw DimensionError("loss_and_grad: target rows differ from batch size");
  }
  require_dims(static_cast<std::size_t>(batch.target.cols()), net.config_.out_dim, "loss_and_grad target");

  const auto& layers = net.layers_;
  const std::size_t depth = layers.size();
  std::vector<Matrix> acts(depth);
  acts[0] = net.assemble(batch.x, batch.y, batch.t);
  Matrix pre;
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    dense(acts[l], layers[l], pre);
    acts[l + 1] = pre.cwiseMax(0.0);
  }
  Matrix raw;
  dense(acts[depth - 1], layers.back(), raw);

  Matrix out = raw;
  Vector radius = Vector::Zero(n);
  const auto& cap = net.config_.output_cap;
  if (cap) {
    for (Eigen::Index i = 0; i < n; ++i) {
      radius[i] = raw.row(i).norm();
      if (radius[i] > *cap) {
        out.row(i) *= *cap / radius[i];
      }
    }
  }

  const Matrix diff = out - batch.target;
  LossAndGrad result;
  result.loss = diff.squaredNorm() / static_cast<double>(n);

  Matrix delta = (2.0 / static_cast<double>(n)) * diff;
  if (cap) {
    // d(K r_hat)/d raw = (K / r) (I - raw raw^T / r^2)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = radius[i];
      if (r > *cap) {
        const double along = raw.row(i).dot(delta.row(i)) / (r * r);
        delta.row(i) = (*cap / r) * (delta.row(i) - along * raw.row(i));
      }
    }
  }

  result.grad.layers.resize(depth);
  for (std::size_t l = depth; l-- > 0;) {
    auto& g = result.grad.layers[l];
    g.weight.noalias() = delta.transpose() * acts[l];
    g.bias = delta.colwise().sum();
    if (l > 0) {
      Matrix back;
      back.noalias() = delta * layers[l].weight;
      delta = (acts[l].array() > 0.0).select(back, 0.0);
    }
  }
  return result;
}

void adam_step(Mlp& net, const Gradients& grad, const AdamOptions& opts) {
  auto& layers = net.layers();
  if (grad.layers.size() != layers.size()) {
    throw DimensionError("adam_step: gradient layer count mismatch");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& g = grad.layers[l];
    if (g.weight.rows() != layers[l].weight.rows() || g.weight.cols() != layers[l].weight.cols() ||
        g.bias.size() != layers[l].bias.size()) {
      throw DimensionError("adam_step: gradient shape mismatch");
    }
    if (!g.weight.allFinite() || !g.bias.allFinite()) {
      throw Error("adam_step: non-finite gradient (training diverged)");
    }
  }

  auto& st = net.adam();
  if (st.m.empty()) {
    st.m = zero_layers(net.config());
    st.v = zero_layers(net.config());
  }
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(opts.beta1, t);
  const double c2 = 1.0 - std::pow(opts.beta2, t);
  const auto& cap = net.config().weight_cap;

  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = opts.beta1 * m + (1.0 - opts.beta1) * g;
    v = opts.beta2 * v + (1.0 - opts.beta2) * g.cwiseAbs2();
    param.array() -= opts.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opts.eps);
    if (cap) {
      param = param.cwiseMax(-*cap).cwiseMin(*cap);
    }
  };
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, st.m[l].weight, st.v[l].weight, grad.layers[l].weight);
    update(layers[l].bias, st.m[l].bias, st.v[l].bias, grad.layers[l].bias);
  }
}

LipschitzProbe probe_lipschitz(const Mlp& net, RngStream& rng, std::size_t pairs, double radius, double stop_time,
                               double delta) {
  const auto& c = net.config();
  LipschitzProbe out;
  auto draw = [&](std::size_t d) {
    Vector v(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      v[i] = rng.uniform(-radius, radius);
    }
    return v;
  };
  auto direction = [&](std::size_t d) {
    Vector u = gauss_vector(rng, d);
    return Vector(delta * u / u.norm());
  };
  for (std::size_t p = 0; p < pairs; ++p) {
    const Vector x = draw(c.x_dim);
    const Vector y = draw(c.cond_dim);
    const double t = c.time_input ? rng.uniform(0.0, stop_time) : 0.0;
    const Vector base = net.forward(x, y, t);

    const Vector dxv = direction(c.x_dim);
    out.x = std::max(out.x, (net.forward(Vector(x + dxv), y, t) - base).lpNorm<Eigen::Infinity>() / delta);
    if (c.cond_dim > 0) {
      const Vector dyv = direction(c.cond_dim);
      out.y = std::max(out.y, (net.forward(x, Vector(y + dyv), t) - base).lpNorm<Eigen::Infinity>() / delta);
    }
    if (c.time_input) {
      const double t2 = t + delta <= stop_time ? t + delta : t - delta;
      out.t = std::max(out.t, (net.forward(x, y, t2) - base).lpNorm<Eigen::Infinity>() / delta);
    }
  }
  return out;
}

} // namespace follmer::nn
