#pragma once

#include "follmer/checkpoint.hpp"
#include "follmer/eval.hpp"
#include "follmer/experiment.hpp"

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace follmer::cli {

/// Executes stages of an experiment and records their outputs.
///
/// Stages run in the fixed order of stage_order(). A stage that needs the
/// product of an earlier stage uses it from memory when that stage ran in the
/// same invocation and otherwise reads it from the output directory (for
/// example model.ckpt). Data for shape and regression sources is regenerated
/// from the seed when gen-data did not run. Every invocation rewrites
/// metrics.csv, summary.txt and manifest.txt.
class Pipeline {
public:
  Pipeline(ExperimentConfig config, std::ostream& log);
  ~Pipeline();

  void run(const std::vector<std::string>& stages);

  const eval::EvalReport& report() const { return report_; }
  const std::string& output_dir() const { return dir_; }

private:
  struct State;

  void stage(const std::string& name);
  void gen_data();
  void train();
  void sample(bool sde);
  void distill();
  void eval_tv();
  void eval_moments();
  void eval_intervals();
  void oracle_check();

  void write_outputs(const std::vector<std::string>& stages);
  std::string path(const std::string& file) const;
  void record_output(const std::string& file);
  void record_input(const std::string& path);

  ExperimentConfig config_;
  std::ostream& log_;
  std::string dir_;
  eval::EvalReport report_;
  std::vector<std::string> outputs_;
  std::vector<std::string> inputs_;
  std::unique_ptr<State> state_;
};

//! Runs the listed stages (sorted into dependency order). Returns 0 on success.
int run_experiment(const ExperimentConfig& config, const std::vector<std::string>& stages, std::ostream& log);

} // namespace follmer::cli
