#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sngm/config.hpp"
#include "sngm/theory.hpp"

namespace sngm {

// One trace row, written at record points (every record_every steps, plus
// steps 0 and T-1). Full-batch metrics describe the iterate w_t the step
// started from; momentum_norm is the norm of the momentum the step produced;
// cum_grads counts every per-sample gradient consumed through this step,
// (t+1)*B exactly. Full-batch evaluations are metrology and are not charged
// against the budget.
struct TrajectoryRecord {
  std::uint64_t t = 0;
  std::uint64_t epoch = 0;
  double lr = 0.0;
  double batch_loss = 0.0;
  double full_loss = 0.0;
  double grad_norm = 0.0;
  double momentum_norm = 0.0;
  std::uint64_t cum_grads = 0;
  std::optional<double> holdout_loss;
  std::optional<double> holdout_accuracy;
};

struct RunResult {
  ParamVector final_w;
  std::vector<TrajectoryRecord> records;
  StationarityReport report;  // over the recorded iterates
  BudgetPlan plan;            // resolved B, eta, T, C
  bool diverged = false;
  std::uint64_t diverged_at = 0;
  double initial_full_loss = 0.0;
  double final_full_loss = 0.0;  // at the last finite iterate
  std::vector<ParamVector> recorded_points;
};

// Executes the configured run. Deterministic: identical config and seed give
// a bitwise-identical record stream. Divergence (non-finite loss, gradient or
// iterate) truncates the trace and sets diverged/diverged_at instead of
// throwing. A normalized-method momentum norm above 1/(1-beta) raises
// DivergenceError: that bound holds by construction, so a violation means
// corrupted state.
RunResult run_experiment(const ExperimentConfig& config);

struct ComparisonRow {
  std::string label;
  Method method = Method::Sngm;
  std::uint64_t batch = 0;
  double learning_rate = 0.0;
  std::uint64_t steps = 0;
  double final_loss = 0.0;
  double avg_grad_norm = 0.0;
  double min_grad_norm = 0.0;
  bool diverged = false;
  std::uint64_t diverged_at = 0;
};

struct ComparisonTable {
  std::uint64_t budget = 0;
  std::vector<ComparisonRow> rows;
};

// Runs every config and tabulates the results. All configs must resolve to
// the same total gradient budget; a single config is allowed but degenerate
// (a warning string is returned through *warning when given).
ComparisonTable run_comparison(const std::vector<ExperimentConfig>& configs,
                               std::string* warning = nullptr);

// Trace CSV: fixed header, one row per record, LF line endings, doubles
// printed with %.17g so rereading reproduces the exact values.
void write_trace_csv(const std::vector<TrajectoryRecord>& records,
                     const std::string& path, bool with_holdout);
std::string trace_csv_string(const std::vector<TrajectoryRecord>& records,
                             bool with_holdout);

// Two-column plot data (x = cumulative gradient computations, y = metric)
// with a '# series: <name>' header line.
void emit_plot_data(const std::vector<TrajectoryRecord>& records, PlotMetric metric,
                    const std::string& path);

std::string format_comparison(const ComparisonTable& table);

}  // namespace sngm
