#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "sngm/config.hpp"
#include "sngm/errors.hpp"
#include "sngm/harness.hpp"
#include "sngm/theory.hpp"

using namespace sngm;

namespace {

const char* kQuadSngm = R"(
# normalized momentum on a stiff quadratic, constants-free plan
[problem]
kind = "quadratic"
spectrum = logspace:1:100:20
samples = 64
center_scale = 0.25
start_offset = 1.0
seed = 777

[optimizer]
method = "sngm"
beta = 0.9

[run]
seed = 1
budget = 4096
plan = "corollary2"
record_every = 1
)";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig quad_manual(Method method, double beta, double lr,
                             std::size_t batch, std::uint64_t budget,
                             std::uint64_t run_seed, double top = 32.0,
                             double center_scale = 0.02) {
  std::ostringstream text;
  text << "[problem]\nkind = \"quadratic\"\nspectrum = logspace:1:" << top
       << ":20\nsamples = 64\ncenter_scale = " << center_scale
       << "\nstart_offset = 1.0\nseed = 555\n";
  text << "[optimizer]\nmethod = \"" << method_name(method) << "\"\nbeta = " << beta
       << "\nbatch_size = " << batch << "\n";
  text << "[schedule]\nkind = \"poly\"\npower = 2\nbase_lr = " << lr << "\n";
  text << "[run]\nseed = " << run_seed << "\nbudget = " << budget
       << "\nrecord_every = 256\n";
  return parse_config_text(text.str(), "inline");
}

}  // namespace

TEST_CASE("config parsing accepts the documented schema") {
  const ExperimentConfig cfg = parse_config_text(kQuadSngm, "test");
  CHECK(cfg.problem.kind == ProblemKind::Quadratic);
  CHECK(cfg.problem.spectrum.size() == 20);
  CHECK(cfg.problem.spectrum.front() == doctest::Approx(1.0));
  CHECK(cfg.problem.spectrum.back() == doctest::Approx(100.0));
  CHECK(cfg.optimizer.method == Method::Sngm);
  CHECK(cfg.run.plan == PlanMode::Corollary2);
  CHECK(*cfg.run.budget == 4096);
}

TEST_CASE("config parser rejects unknown keys and sections") {
  CHECK_THROWS_AS(parse_config_text(std::string(kQuadSngm) + "typo_key = 3\n", "test"),
                  ValidationError);
  CHECK_THROWS_AS(parse_config_text(std::string(kQuadSngm) + "[mystery]\nx = 1\n", "test"),
                  ValidationError);
}

TEST_CASE("config parser enforces the budget-or-steps choice") {
  std::string both = kQuadSngm;
  both += "steps = 10\n";  // [run] already has budget
  CHECK_THROWS_WITH_AS(parse_config_text(both, "test"),
                       doctest::Contains("exactly one"), ValidationError);

  std::string neither = kQuadSngm;
  const auto pos = neither.find("budget = 4096\n");
  neither.erase(pos, std::string("budget = 4096\n").size());
  CHECK_THROWS_AS(parse_config_text(neither, "test"), ValidationError);
}

TEST_CASE("config parser catches plan-mode conflicts") {
  // batch_size together with a plan mode
  std::string text = kQuadSngm;
  const auto opt_pos = text.find("beta = 0.9\n");
  text.insert(opt_pos, "batch_size = 8\n");
  CHECK_THROWS_WITH_AS(parse_config_text(text, "test"), doctest::Contains("plan"),
                       ValidationError);
}

TEST_CASE("micro batch must divide the batch") {
  ExperimentConfig cfg = quad_manual(Method::Msgd, 0.9, 0.001, 16, 1024, 3);
  cfg.optimizer.micro_batch = 5;
  CHECK_THROWS_AS(run_experiment(cfg), ValidationError);
}

TEST_CASE("zero budget is rejected") {
  std::string text = kQuadSngm;
  const auto pos = text.find("budget = 4096");
  text.replace(pos, std::string("budget = 4096").size(), "budget = 0");
  CHECK_THROWS_WITH_AS(parse_config_text(text, "test"), doctest::Contains("empty budget"),
                       ValidationError);
}

TEST_CASE("experiment run is deterministic byte for byte") {
  const ExperimentConfig cfg = parse_config_text(kQuadSngm, "test");
  const RunResult first = run_experiment(cfg);
  const RunResult second = run_experiment(cfg);
  CHECK(trace_csv_string(first.records, false) == trace_csv_string(second.records, false));
  for (std::size_t j = 0; j < first.final_w.dim(); ++j) {
    CHECK(first.final_w.coords[j] == second.final_w.coords[j]);
  }
}

TEST_CASE("budget accounting is exact") {
  const ExperimentConfig cfg = parse_config_text(kQuadSngm, "test");
  const RunResult result = run_experiment(cfg);
  // corollary2 at 4096: B = 64, T = 64
  CHECK(result.plan.batch == 64);
  CHECK(result.plan.steps == 64);
  for (const auto& row : result.records) {
    CHECK(row.cum_grads == (row.t + 1) * result.plan.batch);
  }
  CHECK(result.records.back().cum_grads == result.plan.steps * result.plan.batch);
}

TEST_CASE("record points include the first and last step") {
  ExperimentConfig cfg = parse_config_text(kQuadSngm, "test");
  cfg.run.record_every = 17;
  const RunResult result = run_experiment(cfg);
  REQUIRE(!result.records.empty());
  CHECK(result.records.front().t == 0);
  CHECK(result.records.back().t == result.plan.steps - 1);
  for (const auto& row : result.records) {
    const bool on_grid = row.t % 17 == 0 || row.t == result.plan.steps - 1;
    CHECK(on_grid);
  }
}

TEST_CASE("momentum column respects the normalized-method limit") {
  const ExperimentConfig cfg = parse_config_text(kQuadSngm, "test");
  const RunResult result = run_experiment(cfg);
  const double limit = 1.0 / (1.0 - cfg.optimizer.beta);
  for (const auto& row : result.records) {
    CHECK(row.momentum_norm <= limit + 1e-9);
  }
}

TEST_CASE("epoch column counts ceil(n/B) steps per epoch") {
  // n = 64, B = 16: 4 steps per epoch
  const ExperimentConfig cfg = quad_manual(Method::Msgd, 0.0, 0.001, 16, 512, 9);
  ExperimentConfig dense = cfg;
  dense.run.record_every = 1;
  const RunResult result = run_experiment(dense);
  for (const auto& row : result.records) {
    CHECK(row.epoch == row.t / 4);
  }
}

TEST_CASE("regression: normalized momentum makes progress on the stiff quadratic") {
  const ExperimentConfig cfg = parse_config_text(kQuadSngm, "test");
  const RunResult result = run_experiment(cfg);
  CHECK_FALSE(result.diverged);
  CHECK(result.records.back().grad_norm < result.records.front().grad_norm);
  // golden values pinned from the first run of this configuration
  CHECK(result.records.front().grad_norm ==
        doctest::Approx(36.076151229356604).epsilon(1e-12));
  CHECK(result.records.back().grad_norm ==
        doctest::Approx(6.1691122675849233).epsilon(1e-12));
}

TEST_CASE("divergence truncates the trace and is flagged") {
  // eta * L = 100 on the stiff axis: the momentum recursion explodes
  const ExperimentConfig cfg =
      quad_manual(Method::Msgd, 0.9, 1.0, 16, 65536, 4, 100.0, 0.25);
  ExperimentConfig constant = cfg;
  constant.schedule.kind = "constant";
  const RunResult result = run_experiment(constant);
  CHECK(result.diverged);
  CHECK(result.diverged_at > 0);
  CHECK(result.diverged_at < 4096);
  for (const auto& row : result.records) {
    CHECK(row.t < result.diverged_at);
    CHECK(std::isfinite(row.full_loss));
  }
}

TEST_CASE("holdout columns appear only with a split") {
  const std::string csv_path = "/tmp/sngm_test_holdout_run.csv";
  {
    std::ofstream out(csv_path);
    for (int i = 0; i < 40; ++i) {
      out << (i % 7) * 0.1 << "," << ((i * 3) % 5) * 0.2 << "," << (i % 2) << "\n";
    }
  }
  std::ostringstream text;
  text << "[problem]\nkind = \"logistic\"\ndata = \"" << csv_path
       << "\"\nholdout_fraction = 0.25\n"
       << "[optimizer]\nmethod = \"sngd\"\nbatch_size = 10\n"
       << "[schedule]\nbase_lr = 0.5\n"
       << "[run]\nseed = 2\nsteps = 20\nrecord_every = 5\n";
  const ExperimentConfig cfg = parse_config_text(text.str(), "inline");
  const RunResult result = run_experiment(cfg);
  for (const auto& row : result.records) {
    REQUIRE(row.holdout_loss.has_value());
    REQUIRE(row.holdout_accuracy.has_value());
    CHECK(*row.holdout_accuracy >= 0.0);
    CHECK(*row.holdout_accuracy <= 1.0);
  }
  const std::string csv = trace_csv_string(result.records, true);
  CHECK(csv.find("holdout_loss,holdout_accuracy") != std::string::npos);
}

TEST_CASE("trace csv round trips through a file unchanged") {
  const ExperimentConfig cfg = parse_config_text(kQuadSngm, "test");
  ExperimentConfig with_output = cfg;
  with_output.output.trace_path = "/tmp/sngm_test_trace.csv";
  const RunResult result = run_experiment(with_output);
  const std::string from_file = read_file(with_output.output.trace_path);
  CHECK(from_file == trace_csv_string(result.records, false));
  CHECK(from_file.rfind("t,epoch,lr,batch_loss,full_loss,grad_norm,momentum_norm,cum_grads\n",
                        0) == 0);
  CHECK(from_file.find("\r") == std::string::npos);
}

TEST_CASE("plot data emission") {
  const ExperimentConfig cfg = parse_config_text(kQuadSngm, "test");
  const RunResult result = run_experiment(cfg);

  std::vector<TrajectoryRecord> three(result.records.begin(), result.records.begin() + 3);
  const std::string path = "/tmp/sngm_test_plot.dat";
  emit_plot_data(three, PlotMetric::GradNorm, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "# series: grad_norm");
  int lines = 0;
  std::uint64_t x;
  double y;
  while (in >> x >> y) {
    CHECK(x == three[lines].cum_grads);
    CHECK(y == three[lines].grad_norm);
    ++lines;
  }
  CHECK(lines == 3);

  CHECK_THROWS_AS(emit_plot_data({}, PlotMetric::FullLoss, path), ValidationError);
}

TEST_CASE("comparison requires a shared budget") {
  std::vector<ExperimentConfig> configs = {
      quad_manual(Method::Msgd, 0.9, 0.01, 16, 1024, 5),
      quad_manual(Method::Sngm, 0.9, 0.05, 16, 2048, 5),
  };
  CHECK_THROWS_WITH_AS(run_comparison(configs), doctest::Contains("budget"),
                       ValidationError);

  std::string warning;
  const auto single = run_comparison({quad_manual(Method::Sngm, 0.9, 0.05, 16, 1024, 5)},
                                     &warning);
  CHECK(single.rows.size() == 1);
  CHECK(!warning.empty());
}

TEST_CASE("large-batch comparison shows the expected ordering") {
  // Equal budget; the large-batch momentum run with the linearly scaled rate
  // exceeds the stable step size and collapses, the normalized method at the
  // same large batch does not.
  const std::uint64_t budget = 65536;
  const double small_lr = 16.0 / 256.0 / 16.0;  // B/sqrt(C) for B=16
  const double large_lr = 1.0;                  // B/sqrt(C) for B=256
  const double sngm_lr = 1.0 / 16.0;            // sqrt(B/C) for B=256

  std::vector<ExperimentConfig> configs = {
      quad_manual(Method::Msgd, 0.9, small_lr, 16, budget, 11),
      quad_manual(Method::Msgd, 0.9, large_lr, 256, budget, 11),
      quad_manual(Method::Sngm, 0.9, sngm_lr, 256, budget, 11),
  };
  const ComparisonTable table = run_comparison(configs);
  REQUIRE(table.rows.size() == 3);
  const auto& small = table.rows[0];
  const auto& large = table.rows[1];
  const auto& normalized = table.rows[2];

  CHECK_FALSE(small.diverged);
  CHECK(large.diverged);
  CHECK_FALSE(normalized.diverged);
  CHECK(normalized.final_loss <= 1.1 * small.final_loss);

  const std::string rendered = format_comparison(table);
  CHECK(rendered.find("diverged") != std::string::npos);
  CHECK(rendered.find("msgd") != std::string::npos);
  CHECK(rendered.find("sngm") != std::string::npos);
}

TEST_CASE("measured stationarity sits below the normalized-method bound") {
  // noiseless variant: identical centers make every batch gradient exact
  std::ostringstream text;
  text << "[problem]\nkind = \"quadratic\"\nspectrum = 1,4\nsamples = 32\n"
       << "identical_centers = true\nstart_offset = 1.0\nseed = 90\n"
       << "[optimizer]\nmethod = \"sngm\"\nbeta = 0\n"
       << "[run]\nseed = 6\nbudget = 1024\nplan = \"corollary2\"\nrecord_every = 1\n";
  const ExperimentConfig cfg = parse_config_text(text.str(), "inline");
  const RunResult result = run_experiment(cfg);
  REQUIRE_FALSE(result.diverged);

  BuiltProblem built = build_problem(cfg.problem);
  SmoothnessParams params;
  params.smoothness = *built.problem->known_smoothness();
  params.sigma = 0.0;
  const double gap = result.initial_full_loss - *built.problem->optimal_value();
  const double rhs = sngm_bound_rhs(params, 0.0, result.plan.learning_rate,
                                    result.plan.batch, result.plan.steps, gap,
                                    Regime::Smooth);
  CHECK(result.report.avg_grad_norm <= rhs);
}

TEST_CASE("measured stationarity sits below the momentum bound when eta is valid") {
  for (double beta : {0.0, 0.9}) {
    std::ostringstream text;
    const double limit = (1.0 - beta) * (1.0 - beta) / ((1.0 + beta) * 4.0);
    const double lr = 0.9 * limit;
    text << "[problem]\nkind = \"quadratic\"\nspectrum = 1,4\nsamples = 8\n"
         << "identical_centers = true\nstart_offset = 1.0\nseed = 91\n"
         << "[optimizer]\nmethod = \"msgd\"\nbeta = " << beta
         << "\nbatch_size = 8\n"
         << "[schedule]\nbase_lr = " << lr << "\n"
         << "[run]\nseed = 7\nsteps = 128\nrecord_every = 1\n";
    const ExperimentConfig cfg = parse_config_text(text.str(), "inline");
    const RunResult result = run_experiment(cfg);
    REQUIRE_FALSE(result.diverged);

    BuiltProblem built = build_problem(cfg.problem);
    SmoothnessParams params;
    params.smoothness = 4.0;
    params.sigma = 0.0;
    const double gap = result.initial_full_loss - *built.problem->optimal_value();
    const double rhs = msgd_bound_rhs(params, beta, lr, 8, 128, gap);
    CHECK(result.report.avg_sq_grad_norm <= rhs);
  }
}

TEST_CASE("epoch milestones convert to steps inside a run") {
  // n = 64, B = 16: 4 steps per epoch; milestones at epochs 2 and 4 drop the
  // rate at steps 8 and 16.
  std::ostringstream text;
  text << "[problem]\nkind = \"quadratic\"\nspectrum = 1,4\nsamples = 64\n"
       << "identical_centers = true\nseed = 92\n"
       << "[optimizer]\nmethod = \"msgd\"\nbeta = 0\nbatch_size = 16\n"
       << "[schedule]\nkind = \"step\"\nbase_lr = 0.08\nmilestones = \"2,4\"\n"
       << "factor = 0.5\n"
       << "[run]\nseed = 8\nsteps = 24\nrecord_every = 1\n";
  const ExperimentConfig cfg = parse_config_text(text.str(), "inline");
  const RunResult result = run_experiment(cfg);
  REQUIRE(result.records.size() == 24);
  CHECK(result.records[0].lr == doctest::Approx(0.08));
  CHECK(result.records[7].lr == doctest::Approx(0.08));
  CHECK(result.records[8].lr == doctest::Approx(0.04));
  CHECK(result.records[15].lr == doctest::Approx(0.04));
  CHECK(result.records[16].lr == doctest::Approx(0.02));
  CHECK(result.records[23].lr == doctest::Approx(0.02));
}

TEST_CASE("warmup epochs ramp the rate from the configured start") {
  std::ostringstream text;
  text << "[problem]\nkind = \"quadratic\"\nspectrum = 1,4\nsamples = 64\n"
       << "identical_centers = true\nseed = 93\n"
       << "[optimizer]\nmethod = \"sngm\"\nbeta = 0.9\nbatch_size = 16\n"
       << "[schedule]\nkind = \"constant\"\nbase_lr = 0.9\nwarmup_epochs = 2\n"
       << "warmup_from = 0.1\n"
       << "[run]\nseed = 8\nsteps = 16\nrecord_every = 1\n";
  const ExperimentConfig cfg = parse_config_text(text.str(), "inline");
  const RunResult result = run_experiment(cfg);
  REQUIRE(result.records.size() == 16);
  // 8 warmup steps from 0.1 toward 0.9, then constant
  CHECK(result.records[0].lr == doctest::Approx(0.1));
  CHECK(result.records[4].lr == doctest::Approx(0.5));
  CHECK(result.records[8].lr == doctest::Approx(0.9));
  CHECK(result.records[15].lr == doctest::Approx(0.9));
}

TEST_CASE("shipped example configs parse and run") {
  // cifar_mlp.toml needs an external download; everything else must work
  // out of the box from the repo root.
  const std::vector<std::string> runnable = {
      "configs/quad_msgd_valid.toml", "configs/exp_sngm.toml",
      "configs/exp_gd.toml",          "configs/logistic_holdout.toml",
      "configs/mlp_tanh.toml",
  };
  for (const auto& path : runnable) {
    ExperimentConfig cfg = load_config(path);
    cfg.output.trace_path.clear();
    cfg.output.plot_path.clear();
    // keep the smoke test fast
    if (cfg.run.budget && *cfg.run.budget > 4096) cfg.run.budget = 4096;
    if (cfg.run.steps && *cfg.run.steps > 128) cfg.run.steps = 128;
    const RunResult result = run_experiment(cfg);
    CHECK_FALSE(result.diverged);
  }
  // the comparison trio parses; the large-batch member is built to diverge
  const ExperimentConfig trio =
      load_config("configs/ac5_msgd_large.toml");
  CHECK(trio.optimizer.batch == 256);
  CHECK(load_config("configs/quad_sngm.toml").run.plan == PlanMode::Corollary2);
}

TEST_CASE("lars knobs flow through the config") {
  std::ostringstream text;
  text << "[problem]\nkind = \"quadratic\"\nspectrum = 1,4\nsamples = 16\nseed = 94\n"
       << "[optimizer]\nmethod = \"lars\"\nbeta = 0.9\nbatch_size = 8\n"
       << "trust = 0.01\nlars_epsilon = 1e-7\nweight_decay = 0.0001\n"
       << "[schedule]\nbase_lr = 0.5\n"
       << "[run]\nseed = 12\nsteps = 4\n";
  const ExperimentConfig cfg = parse_config_text(text.str(), "inline");
  CHECK(cfg.optimizer.trust == 0.01);
  CHECK(cfg.optimizer.lars_epsilon == 1e-7);
  // quadratics have no layer structure, so the run must reject lars cleanly
  CHECK_THROWS_AS(run_experiment(cfg), ValidationError);
}

TEST_CASE("lars trains the mlp through the harness") {
  std::ostringstream text;
  text << "[problem]\nkind = \"mlp\"\ndata = \"data/toy_binary.csv\"\n"
       << "layout = \"3,6,1\"\nactivation = \"tanh\"\nseed = 95\n"
       << "[optimizer]\nmethod = \"lars\"\nbeta = 0.9\nbatch_size = 12\n"
       << "trust = 0.02\nweight_decay = 0.0001\n"
       << "[schedule]\nbase_lr = 1.0\n"
       << "[run]\nseed = 13\nsteps = 200\nrecord_every = 20\n";
  const ExperimentConfig cfg = parse_config_text(text.str(), "inline");
  const RunResult result = run_experiment(cfg);
  CHECK_FALSE(result.diverged);
  CHECK(result.final_full_loss < result.initial_full_loss);
}
