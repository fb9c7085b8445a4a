#include "sngm/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <optional>

#include "sngm/config.hpp"
#include "sngm/errors.hpp"
#include "sngm/harness.hpp"
#include "sngm/theory.hpp"

namespace sngm {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void print_plan(const BudgetPlan& plan, std::ostream& out) {
  out << "B=" << plan.batch << " eta=" << fmt(plan.learning_rate) << " T=" << plan.steps;
  if (plan.guaranteed_bound) out << " bound=" << fmt(*plan.guaranteed_bound);
  out << "\n";
}

int do_run(const std::string& config_path, std::ostream& out) {
  const ExperimentConfig cfg = load_config(config_path);
  const RunResult result = run_experiment(cfg);
  out << "steps=" << result.plan.steps << " batch=" << result.plan.batch
      << " budget=" << result.plan.budget << "\n";
  out << "initial_full_loss=" << fmt(result.initial_full_loss) << "\n";
  if (result.diverged) {
    out << "diverged at t=" << result.diverged_at << "\n";
    return 2;
  }
  out << "final_full_loss=" << fmt(result.final_full_loss) << "\n";
  out << "avg_grad_norm=" << fmt(result.report.avg_grad_norm)
      << " min_grad_norm=" << fmt(result.report.min_grad_norm) << "\n";
  if (!cfg.output.trace_path.empty()) out << "trace=" << cfg.output.trace_path << "\n";
  return 0;
}

int do_compare(const std::vector<std::string>& config_paths, std::ostream& out,
               std::ostream& err) {
  std::vector<ExperimentConfig> configs;
  configs.reserve(config_paths.size());
  for (const auto& path : config_paths) configs.push_back(load_config(path));
  std::string warning;
  const ComparisonTable table = run_comparison(configs, &warning);
  if (!warning.empty()) err << "warning: " << warning << "\n";
  out << format_comparison(table);
  return 0;
}

// Shared constants for the plan subcommands; only the relevant subset is
// required per rule.
struct PlanArgs {
  std::uint64_t budget = 0;
  double beta = 0.0;
  std::optional<double> sigma;
  std::optional<double> smoothness;
  std::optional<double> gap;
  std::optional<double> grad_growth;
};

int do_plan(const std::string& rule, const PlanArgs& args, std::ostream& out) {
  if (rule == "corollary1") {
    if (!args.sigma || !args.smoothness || !args.gap) {
      throw ValidationError("plan corollary1 needs --sigma, --l and --gap");
    }
    SmoothnessParams params;
    params.sigma = *args.sigma;
    params.smoothness = *args.smoothness;
    const BudgetPlan plan = plan_corollary1(args.budget, args.beta, params, *args.gap);
    print_plan(plan, out);
    return 0;
  }
  if (rule == "corollary2") {
    print_plan(plan_corollary2(args.budget), out);
    return 0;
  }
  if (!args.grad_growth) throw ValidationError("plan corollary3 needs --lambda");
  print_plan(plan_corollary3(args.budget, args.beta, *args.grad_growth), out);
  return 0;
}

struct EstimateArgs {
  std::string config_path;
  std::size_t trials = 50;
  std::size_t points = 40;
  double radius = 0.0;  // 0: per-quantity default
  std::uint64_t seed = 7;
};

int do_estimate(const std::string& what, const EstimateArgs& args, std::ostream& out) {
  const ExperimentConfig cfg = load_config(args.config_path);
  BuiltProblem built = build_problem(cfg.problem);
  SeededRng rng(args.seed);

  if (what == "L") {
    const double radius = args.radius > 0.0 ? args.radius : 1.0;
    const double estimate = estimate_smoothness(*built.problem, rng, args.trials, radius);
    out << "L_estimate=" << fmt(estimate) << " (empirical lower bound, radius=" << fmt(radius)
        << ", trials=" << args.trials << ")\n";
    if (auto known = built.problem->known_smoothness()) {
      out << "L_known=" << fmt(*known)
          << (built.problem->smoothness_is_upper_bound() ? " (upper bound)" : "") << "\n";
    }
    return 0;
  }
  if (what == "sigma") {
    SeededRng init_rng = SeededRng(cfg.problem.seed).child(1);
    std::vector<ParamVector> points;
    points.push_back(built.problem->initial_point(init_rng));
    const double radius = args.radius > 0.0 ? args.radius : 1.0;
    for (std::size_t k = 1; k < std::max<std::size_t>(args.points, 1); ++k) {
      ParamVector w(built.problem->dimension());
      for (double& c : w.coords) c = rng.next_in(-radius, radius);
      points.push_back(std::move(w));
    }
    out << "sigma_estimate=" << fmt(estimate_sigma(*built.problem, points))
        << " (empirical lower bound over " << points.size() << " points)\n";
    return 0;
  }
  // relaxed
  const double radius = args.radius > 0.0 ? args.radius : 2.0;
  const RelaxedFit fit = fit_relaxed_smoothness(*built.problem, rng, args.points, radius);
  out << "L=" << fmt(fit.smoothness) << " lambda=" << fmt(fit.grad_growth)
      << " (fit over " << fit.samples.size() << " points, radius=" << fmt(radius) << ")\n";
  if (!fit.all_converged) {
    out << "note: power iteration did not converge at every point; values kept\n";
  }
  return 0;
}

int do_check_bounds(const std::string& config_path, std::ostream& out) {
  const ExperimentConfig cfg = load_config(config_path);
  BuiltProblem built = build_problem(cfg.problem);
  const Problem& problem = *built.problem;

  const RunResult result = run_experiment(cfg);
  if (result.diverged) {
    out << "diverged at t=" << result.diverged_at << "; no bound to check\n";
    return 2;
  }

  // Constants: explicit config values win, then problem metadata, then
  // estimation.
  SmoothnessParams params;
  params.source = ParamSource::Known;
  if (cfg.run.smoothness) {
    params.smoothness = *cfg.run.smoothness;
  } else if (auto known = problem.known_smoothness()) {
    params.smoothness = *known;
  } else {
    SeededRng rng(cfg.run.seed + 1);
    params.smoothness = estimate_smoothness(problem, rng, 50);
    params.source = ParamSource::Estimated;
  }
  if (cfg.run.grad_growth) {
    params.grad_growth = *cfg.run.grad_growth;
  } else if (auto pair = problem.known_relaxed_pair()) {
    params.grad_growth = pair->second;
  }
  SeededRng init_rng = SeededRng(cfg.problem.seed).child(1);
  const ParamVector w0 = problem.initial_point(init_rng);
  if (cfg.run.sigma) {
    params.sigma = *cfg.run.sigma;
  } else {
    params.sigma = estimate_sigma(problem, {w0});
    params.source = ParamSource::Estimated;
  }

  double gap;
  bool gap_optimistic = false;
  if (cfg.run.gap) {
    gap = *cfg.run.gap;
  } else if (auto opt = problem.optimal_value()) {
    gap = result.initial_full_loss - *opt;
  } else {
    double best = result.initial_full_loss;
    for (const auto& record : result.records) best = std::min(best, record.full_loss);
    gap = result.initial_full_loss - best;
    gap_optimistic = true;
  }

  const Method method = cfg.optimizer.method;
  const double beta = cfg.optimizer.beta;
  double lhs, rhs;
  std::string lhs_name;
  if (method == Method::Msgd) {
    lhs = result.report.avg_sq_grad_norm;
    lhs_name = "avg_sq_grad_norm";
    rhs = msgd_bound_rhs(params, beta, result.plan.learning_rate, result.plan.batch,
                         result.plan.steps, gap);
  } else if (method == Method::Sngm || method == Method::Sngd) {
    lhs = result.report.avg_grad_norm;
    lhs_name = "avg_grad_norm";
    const Regime regime = cfg.run.regime == "relaxed" ? Regime::Relaxed : Regime::Smooth;
    rhs = sngm_bound_rhs(params, beta, result.plan.learning_rate, result.plan.batch,
                         result.plan.steps, gap, regime);
  } else {
    throw ValidationError("check bounds: no bound is implemented for lars");
  }

  out << lhs_name << "=" << fmt(lhs) << " bound_rhs=" << fmt(rhs) << "\n";
  out << "constants: L=" << fmt(params.smoothness) << " sigma=" << fmt(params.sigma)
      << " lambda=" << fmt(params.grad_growth) << " gap=" << fmt(gap)
      << (gap_optimistic ? " (optimistic estimate)" : "")
      << (params.source == ParamSource::Estimated ? " [contains estimates]" : " [known]")
      << "\n";
  out << (lhs <= rhs ? "PASS" : "FAIL") << ": " << lhs_name
      << (lhs <= rhs ? " <= " : " > ") << "bound_rhs\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"SNGM optimization experiments: normalized-momentum training runs, "
               "baselines, budget plans and convergence-bound checks"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run_cmd = app.add_subcommand("run", "execute one experiment config");
  run_cmd->add_option("config", run_config, "experiment config file")->required();

  std::vector<std::string> compare_configs;
  auto* compare_cmd =
      app.add_subcommand("compare", "run several configs at one shared budget");
  compare_cmd->add_option("configs", compare_configs, "experiment config files")
      ->required()
      ->expected(-1);

  auto* plan_cmd = app.add_subcommand("plan", "print a batch/lr/steps prescription");
  plan_cmd->require_subcommand(1);
  PlanArgs plan_args;
  std::string plan_rule;
  for (const std::string rule : {"corollary1", "corollary2", "corollary3"}) {
    auto* sub = plan_cmd->add_subcommand(rule, "prescription rule " + rule);
    sub->add_option("--c", plan_args.budget, "total gradient budget C")->required();
    sub->add_option("--beta", plan_args.beta, "momentum coefficient");
    if (rule == "corollary1") {
      sub->add_option("--sigma", [&plan_args](const CLI::results_t& r) {
        plan_args.sigma = std::stod(r[0]);
        return true;
      }, "gradient noise bound");
      sub->add_option("--l", [&plan_args](const CLI::results_t& r) {
        plan_args.smoothness = std::stod(r[0]);
        return true;
      }, "smoothness constant L");
      sub->add_option("--gap", [&plan_args](const CLI::results_t& r) {
        plan_args.gap = std::stod(r[0]);
        return true;
      }, "initial optimality gap");
    }
    if (rule == "corollary3") {
      sub->add_option("--lambda", [&plan_args](const CLI::results_t& r) {
        plan_args.grad_growth = std::stod(r[0]);
        return true;
      }, "gradient-growth constant lambda");
    }
    sub->callback([&plan_rule, rule] { plan_rule = rule; });
  }

  auto* estimate_cmd = app.add_subcommand("estimate", "estimate problem constants");
  estimate_cmd->require_subcommand(1);
  EstimateArgs estimate_args;
  std::string estimate_what;
  for (const std::string what : {"L", "sigma", "relaxed"}) {
    auto* sub = estimate_cmd->add_subcommand(what, "estimate " + what);
    sub->add_option("config", estimate_args.config_path, "experiment config file")
        ->required();
    sub->add_option("--trials", estimate_args.trials, "pair samples (L)");
    sub->add_option("--points", estimate_args.points, "evaluation points");
    sub->add_option("--radius", estimate_args.radius, "sampling radius");
    sub->add_option("--seed", estimate_args.seed, "estimator seed");
    sub->callback([&estimate_what, what] { estimate_what = what; });
  }

  auto* check_cmd = app.add_subcommand("check", "verify theoretical claims on a run");
  check_cmd->require_subcommand(1);
  std::string check_config;
  auto* bounds_cmd = check_cmd->add_subcommand(
      "bounds", "run a config and compare measured stationarity against the bound");
  bounds_cmd->add_option("config", check_config, "experiment config file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    err << app.help();
    return 1;
  }

  try {
    if (*run_cmd) return do_run(run_config, out);
    if (*compare_cmd) return do_compare(compare_configs, out, err);
    if (*plan_cmd) return do_plan(plan_rule, plan_args, out);
    if (*estimate_cmd) return do_estimate(estimate_what, estimate_args, out);
    if (*check_cmd) return do_check_bounds(check_config, out);
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no subcommand\n";
  return 1;
}

}  // namespace sngm
