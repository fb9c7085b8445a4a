#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sngm/dataset.hpp"
#include "sngm/optimizer.hpp"
#include "sngm/problem.hpp"

namespace sngm {

// Experiment description loaded from a flat sectioned key-value file
// ([section] headers, key = value lines, '#' comments). Unknown keys and
// unknown sections are hard errors so a config never silently drifts from
// what actually ran. The full schema is documented in the README and
// illustrated by the files under configs/.

enum class ProblemKind { Quadratic, Logistic, Exp, Mlp };
enum class DataFormat { Csv, Cifar10 };
enum class PlanMode { Manual, Corollary1, Corollary2, Corollary3 };
enum class PlotMetric { FullLoss, BatchLoss, GradNorm, MomentumNorm };

struct ProblemSpec {
  ProblemKind kind = ProblemKind::Quadratic;
  std::uint64_t seed = 20240501;  // drives center draws and MLP initialization

  // quadratic
  std::vector<double> spectrum;
  std::size_t samples = 16;
  double center_scale = 0.25;
  bool identical_centers = false;
  double start_offset = 1.0;

  // exp
  double exp_rate = 1.0;
  double exp_start = 0.0;

  // logistic / mlp
  std::string data_path;
  DataFormat data_format = DataFormat::Csv;
  std::optional<std::size_t> record_limit;  // cifar10 only
  double l2 = 0.0;
  double holdout_fraction = 0.0;
  std::vector<std::size_t> layout;  // mlp
  Activation activation = Activation::Tanh;
};

struct OptimizerSpec {
  Method method = Method::Sngm;
  double beta = 0.9;
  double weight_decay = 0.0;
  bool decay_before_norm = true;
  double trust = 0.001;
  double lars_epsilon = 1e-9;
  std::optional<std::size_t> batch;        // required in manual plan mode
  std::optional<std::size_t> micro_batch;  // defaults to batch
};

struct ScheduleSpec {
  std::string kind = "constant";  // constant | poly | step
  std::optional<double> base_lr;  // required in manual plan mode
  double power = 1.0;
  std::vector<std::uint64_t> milestones_epochs;
  double factor = 0.1;
  std::uint64_t warmup_epochs = 0;  // > 0 wraps the schedule in a linear ramp
  double warmup_from = 0.1;
};

struct RunSpec {
  std::uint64_t seed = 1;  // drives batch sampling
  std::optional<std::uint64_t> budget;  // C; exactly one of budget/steps
  std::optional<std::uint64_t> steps;   // T
  std::uint64_t record_every = 1;
  PlanMode plan = PlanMode::Manual;
  // Constants for corollary1/corollary3 plan modes and bound checks.
  std::optional<double> sigma;
  std::optional<double> smoothness;
  std::optional<double> gap;
  std::optional<double> grad_growth;  // lambda
  std::string regime = "smooth";      // smooth | relaxed (bound checks)
};

struct OutputSpec {
  std::string trace_path;           // empty: no CSV written
  std::string plot_path;            // empty: no plot data written
  PlotMetric plot_metric = PlotMetric::FullLoss;
};

struct ExperimentConfig {
  ProblemSpec problem;
  OptimizerSpec optimizer;
  ScheduleSpec schedule;
  RunSpec run;
  OutputSpec output;
  std::string source_path;  // where this config was loaded from, if anywhere
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// Instantiates the configured problem (deterministic in problem.seed) and its
// holdout split, when one is configured.
struct BuiltProblem {
  std::unique_ptr<Problem> problem;
  std::optional<DatasetMatrix> holdout;
};
BuiltProblem build_problem(const ProblemSpec& spec);

}  // namespace sngm
