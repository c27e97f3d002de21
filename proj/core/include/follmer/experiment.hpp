#pragma once

#include "follmer/ini.hpp"
#include "follmer/mlp.hpp"
#include "follmer/training.hpp"
#include "follmer/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace follmer::cli {

enum class DataSource { shape, regression, csv, target };

//! Stage names in dependency order.
const std::vector<std::string>& stage_order();

/// Everything one run needs, parsed from the flat config. Sections and keys:
///
///   [experiment] seed, name
///   [data]       source (shape | regression | csv | target), shape, model,
///                path, target, n, dx, dy, scale, holdout
///   [model]      hidden, fourier_features, output_cap, weight_cap,
///                lipschitz_x, lipschitz_y, lipschitz_t
///   [train]      epochs, batch_size, draws_per_example, lr, beta1, beta2, eps
///   [flow]       stop_time, steps, sde_steps
///   [sample]     count, condition
///   [distill]    pairs, hidden, epochs, batch_size, lr, condition, count
///   [eval]       conditions, tv_samples, moment_samples, n_star, alpha,
///                grid_points, sde
///   [oracle]     probes, condition, radius
///   [output]     dir, plots
///   [run]        stages
///
/// The stopping time of [flow] is shared by training and sampling.
struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;

  DataSource source = DataSource::shape;
  std::string shape = "checkerboard";
  std::string model = "M1";
  std::string csv_path;
  std::string target_path;
  std::size_t n = 5000;
  std::size_t dx = 1;
  std::size_t dy = 1;
  bool scale = false;
  double holdout = 0.0;

  nn::MlpConfig velocity_net;
  train::TrainConfig train;
  double stop_time = 0.99;
  std::size_t steps = 100;
  std::size_t sde_steps = 0; // 0: same as steps

  std::size_t sample_count = 1000;
  std::optional<Vector> sample_condition;

  std::size_t distill_pairs = 10000;
  nn::MlpConfig generator_net;
  train::TrainConfig distill_train;
  std::optional<Vector> distill_condition;
  std::size_t distill_count = 1000;

  std::size_t eval_conditions = 1000;
  std::size_t tv_samples = 200;
  std::size_t moment_samples = 500;
  std::size_t n_star = 200;
  double alpha = 0.05;
  std::size_t grid_points = 2048;
  bool eval_sde = false;

  std::size_t oracle_probes = 1000;
  std::optional<Vector> oracle_condition;
  double oracle_radius = 3.0;

  std::string output_dir = "follmer_out";
  bool plots = true;
  std::vector<std::string> stages;

  std::string canonical_text;

  //! Parses and validates; throws before any work on unknown keys or
  //! inconsistent settings.
  static ExperimentConfig from_ini(const IniFile& ini);

  FlowConfig flow() const { return FlowConfig(stop_time, steps); }
  FlowConfig sde_flow() const { return FlowConfig(stop_time, sde_steps ? sde_steps : steps); }
  //! FNV-1a 64 of the canonical config text, as 16 hex digits.
  std::string config_hash() const;
  //! Output directory after applying FOLLMER_OUTPUT_ROOT.
  std::string resolved_output_dir() const;
  //! Seed for a stage; distinct stages get unrelated streams.
  std::uint64_t stage_seed(std::uint64_t stage) const;

  void validate() const;
};

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

} // namespace follmer::cli
