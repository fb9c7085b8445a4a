#include "sngm/harness.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>

#include "sngm/errors.hpp"
#include "sngm/optimizer.hpp"
#include "sngm/rng.hpp"

namespace sngm {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void ensure_parent_dir(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
}

// Resolves (B, eta, T, C) from the plan mode, the budget fields and the
// manual optimizer/schedule settings.
BudgetPlan resolve_plan(const ExperimentConfig& cfg) {
  BudgetPlan plan;
  switch (cfg.run.plan) {
    case PlanMode::Manual: {
      plan.batch = *cfg.optimizer.batch;
      if (cfg.run.budget) {
        plan.budget = *cfg.run.budget;
        plan.steps = (plan.budget + plan.batch - 1) / plan.batch;
      } else {
        plan.steps = *cfg.run.steps;
        plan.budget = plan.steps * plan.batch;
      }
      plan.learning_rate = *cfg.schedule.base_lr;
      break;
    }
    case PlanMode::Corollary1: {
      SmoothnessParams params;
      params.smoothness = *cfg.run.smoothness;
      params.sigma = *cfg.run.sigma;
      plan = plan_corollary1(*cfg.run.budget, cfg.optimizer.beta, params, *cfg.run.gap);
      break;
    }
    case PlanMode::Corollary2:
      plan = plan_corollary2(*cfg.run.budget);
      break;
    case PlanMode::Corollary3:
      plan = plan_corollary3(*cfg.run.budget, cfg.optimizer.beta, *cfg.run.grad_growth);
      break;
  }
  if (plan.steps == 0) throw ValidationError("empty budget: zero steps resolved");
  return plan;
}

LrSchedule build_schedule(const ScheduleSpec& spec, double base_lr,
                          std::uint64_t total_steps, std::uint64_t steps_per_epoch) {
  PlainSchedule plain = ConstantLr{base_lr};
  if (spec.kind == "poly") {
    plain = PolyLr{base_lr, total_steps, spec.power};
  } else if (spec.kind == "step") {
    StepLr step;
    step.base = base_lr;
    step.factor = spec.factor;
    for (std::uint64_t epoch : spec.milestones_epochs) {
      step.milestones.push_back(epoch * steps_per_epoch);
    }
    plain = step;
  }
  if (spec.warmup_epochs > 0) {
    WarmupLr warm;
    warm.from = spec.warmup_from;
    warm.steps = spec.warmup_epochs * steps_per_epoch;
    warm.inner = plain;
    return warm;
  }
  return std::visit([](auto s) -> LrSchedule { return s; }, plain);
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
  BuiltProblem built = build_problem(cfg.problem);
  const Problem& problem = *built.problem;
  const std::size_t n = problem.sample_count();
  const std::size_t d = problem.dimension();

  RunResult result;
  result.plan = resolve_plan(cfg);
  const std::uint64_t total_steps = result.plan.steps;
  const auto batch = static_cast<std::size_t>(result.plan.batch);
  const std::size_t micro = cfg.optimizer.micro_batch.value_or(batch);
  if (micro == 0 || batch % micro != 0) {
    throw ValidationError("micro_batch " + std::to_string(micro) +
                          " does not divide resolved batch size " + std::to_string(batch));
  }
  const std::uint64_t steps_per_epoch = (n + batch - 1) / batch;

  OptimizerOptions opts;
  opts.method = cfg.optimizer.method;
  opts.beta = cfg.optimizer.beta;
  opts.weight_decay = cfg.optimizer.weight_decay;
  opts.decay_before_norm = cfg.optimizer.decay_before_norm;
  opts.trust = cfg.optimizer.trust;
  opts.lars_epsilon = cfg.optimizer.lars_epsilon;
  opts.schedule = build_schedule(cfg.schedule, result.plan.learning_rate, total_steps,
                                 steps_per_epoch);

  SeededRng problem_rng(cfg.problem.seed);
  SeededRng init_rng = problem_rng.child(1);
  ParamVector w = problem.initial_point(init_rng);

  Optimizer optimizer(opts, d);
  SeededRng batch_rng = SeededRng(cfg.run.seed).child(0);
  GradAccumulator accumulator(micro, batch, d);

  const bool normalized =
      cfg.optimizer.method == Method::Sngm || cfg.optimizer.method == Method::Sngd;
  const bool momentum_bound_applies =
      normalized && (cfg.optimizer.weight_decay == 0.0 || cfg.optimizer.decay_before_norm);

  result.initial_full_loss = problem.full_loss(w);
  result.final_full_loss = result.initial_full_loss;

  for (std::uint64_t t = 0; t < total_steps; ++t) {
    const auto indices = sample_batch_indices(batch_rng, n, batch);

    const double batch_loss = problem.batch_loss(w, indices);
    if (!std::isfinite(batch_loss)) {
      result.diverged = true;
      result.diverged_at = t;
      break;
    }

    std::optional<ParamVector> grad;
    for (std::size_t chunk = 0; chunk * micro < batch; ++chunk) {
      const std::span<const std::size_t> micro_span(indices.data() + chunk * micro, micro);
      grad = accumulator.add(problem.batch_gradient(w, micro_span));
    }
    if (!grad) throw ValidationError("accumulator failed to emit a full batch gradient");

    const bool record = (t % cfg.run.record_every == 0) || t + 1 == total_steps;
    TrajectoryRecord row;
    if (record) {
      row.full_loss = problem.full_loss(w);
      row.grad_norm = euclidean_norm(problem.full_gradient(w));
      if (!std::isfinite(row.full_loss)) {
        result.diverged = true;
        result.diverged_at = t;
        break;
      }
      if (built.holdout) {
        if (auto metrics = problem.evaluate_dataset(w, *built.holdout)) {
          row.holdout_loss = metrics->loss;
          row.holdout_accuracy = metrics->accuracy;
        }
      }
      result.recorded_points.push_back(w);  // iterate the step starts from
    }

    try {
      optimizer.step(w, *grad);
    } catch (const DivergenceError&) {
      if (record) result.recorded_points.pop_back();
      result.diverged = true;
      result.diverged_at = t;
      break;
    }

    if (record) {
      row.t = t;
      row.epoch = t / steps_per_epoch;
      row.lr = optimizer.last_lr();
      row.batch_loss = batch_loss;
      row.momentum_norm = optimizer.momentum_norm();
      row.cum_grads = (t + 1) * batch;
      if (momentum_bound_applies &&
          row.momentum_norm > momentum_norm_limit(cfg.optimizer.beta) + 1e-9) {
        throw DivergenceError(
            "momentum norm " + std::to_string(row.momentum_norm) +
                " exceeds its guaranteed limit " +
                std::to_string(momentum_norm_limit(cfg.optimizer.beta)) + " at step " +
                std::to_string(t),
            t);
      }
      result.records.push_back(row);
      result.final_full_loss = row.full_loss;
    }
  }

  result.final_w = w;
  if (!result.diverged) {
    const double loss_at_end = problem.full_loss(w);
    if (std::isfinite(loss_at_end)) {
      result.final_full_loss = loss_at_end;
    } else {
      result.diverged = true;
      result.diverged_at = total_steps == 0 ? 0 : total_steps - 1;
    }
  }
  if (!result.recorded_points.empty()) {
    result.report = stationarity(problem, result.recorded_points);
  }
  if (!cfg.output.trace_path.empty()) {
    write_trace_csv(result.records, cfg.output.trace_path, built.holdout.has_value());
  }
  if (!cfg.output.plot_path.empty() && !result.records.empty()) {
    emit_plot_data(result.records, cfg.output.plot_metric, cfg.output.plot_path);
  }
  return result;
}

ComparisonTable run_comparison(const std::vector<ExperimentConfig>& configs,
                               std::string* warning) {
  if (configs.empty()) throw ValidationError("comparison needs at least one config");
  if (configs.size() == 1 && warning) {
    *warning = "comparison over a single config is degenerate";
  }

  ComparisonTable table;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    RunResult run = run_experiment(configs[k]);
    if (k == 0) {
      table.budget = run.plan.budget;
    } else if (run.plan.budget != table.budget) {
      throw ValidationError(
          "comparison members disagree on total gradient budget: " +
          std::to_string(table.budget) + " vs " + std::to_string(run.plan.budget) +
          " (" + configs[k].source_path + ")");
    }
    ComparisonRow row;
    row.label = configs[k].source_path.empty() ? ("config " + std::to_string(k))
                                               : configs[k].source_path;
    row.method = configs[k].optimizer.method;
    row.batch = run.plan.batch;
    row.learning_rate = run.plan.learning_rate;
    row.steps = run.plan.steps;
    row.final_loss = run.diverged ? std::numeric_limits<double>::infinity()
                                  : run.final_full_loss;
    row.avg_grad_norm = run.report.avg_grad_norm;
    row.min_grad_norm = run.report.min_grad_norm;
    row.diverged = run.diverged;
    row.diverged_at = run.diverged_at;
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::string trace_csv_string(const std::vector<TrajectoryRecord>& records,
                             bool with_holdout) {
  std::string out = "t,epoch,lr,batch_loss,full_loss,grad_norm,momentum_norm,cum_grads";
  if (with_holdout) out += ",holdout_loss,holdout_accuracy";
  out += "\n";
  char buf[64];
  for (const auto& r : records) {
    std::snprintf(buf, sizeof(buf), "%" PRIu64 ",%" PRIu64 ",", r.t, r.epoch);
    out += buf;
    out += fmt_double(r.lr) + "," + fmt_double(r.batch_loss) + "," +
           fmt_double(r.full_loss) + "," + fmt_double(r.grad_norm) + "," +
           fmt_double(r.momentum_norm) + ",";
    std::snprintf(buf, sizeof(buf), "%" PRIu64, r.cum_grads);
    out += buf;
    if (with_holdout) {
      out += "," + fmt_double(r.holdout_loss.value_or(0.0)) + "," +
             fmt_double(r.holdout_accuracy.value_or(0.0));
    }
    out += "\n";
  }
  return out;
}

void write_trace_csv(const std::vector<TrajectoryRecord>& records,
                     const std::string& path, bool with_holdout) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open trace output: " + path);
  out << trace_csv_string(records, with_holdout);
  if (!out) throw ValidationError("failed writing trace output: " + path);
}

void emit_plot_data(const std::vector<TrajectoryRecord>& records, PlotMetric metric,
                    const std::string& path) {
  if (records.empty()) throw ValidationError("emit_plot_data: no records");
  ensure_parent_dir(path);
  std::string series;
  switch (metric) {
    case PlotMetric::FullLoss: series = "full_loss"; break;
    case PlotMetric::BatchLoss: series = "batch_loss"; break;
    case PlotMetric::GradNorm: series = "grad_norm"; break;
    case PlotMetric::MomentumNorm: series = "momentum_norm"; break;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot open plot output: " + path);
  out << "# series: " << series << "\n";
  for (const auto& r : records) {
    double y = 0.0;
    switch (metric) {
      case PlotMetric::FullLoss: y = r.full_loss; break;
      case PlotMetric::BatchLoss: y = r.batch_loss; break;
      case PlotMetric::GradNorm: y = r.grad_norm; break;
      case PlotMetric::MomentumNorm: y = r.momentum_norm; break;
    }
    out << r.cum_grads << " " << fmt_double(y) << "\n";
  }
  if (!out) throw ValidationError("failed writing plot output: " + path);
}

std::string format_comparison(const ComparisonTable& table) {
  std::ostringstream out;
  out << "budget C = " << table.budget << "\n";
  out << "method  batch  lr         steps   final_loss     avg_grad_norm  min_grad_norm  status\n";
  for (const auto& row : table.rows) {
    const std::string status =
        row.diverged ? ("diverged at t=" + std::to_string(row.diverged_at)) : "ok";
    const std::string final_loss = row.diverged ? "diverged" : fmt_short(row.final_loss);
    char line[256];
    std::snprintf(line, sizeof(line),
                  "%-7s %-6" PRIu64 " %-10s %-7" PRIu64 " %-14s %-14s %-14s %s\n",
                  method_name(row.method).c_str(), row.batch,
                  fmt_short(row.learning_rate).c_str(), row.steps, final_loss.c_str(),
                  fmt_short(row.avg_grad_norm).c_str(),
                  fmt_short(row.min_grad_norm).c_str(), status.c_str());
    out << line;
  }
  return out.str();
}

}  // namespace sngm
