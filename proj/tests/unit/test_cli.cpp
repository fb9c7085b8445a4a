#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sngm/cli.hpp"

using namespace sngm;

namespace {

struct CliRun {
  int exit_code = 0;
  std::string out;
  std::string err;
};

CliRun invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun result;
  result.exit_code = cli_main(args, out, err);
  result.out = out.str();
  result.err = err.str();
  return result;
}

std::string write_config(const std::string& name, const std::string& text) {
  const std::string path = "/tmp/sngm_cli_" + name;
  std::ofstream out(path);
  out << text;
  return path;
}

const char* kExpConfig = R"(
[problem]
kind = "exp"
a = 1.0
start = 3.0

[optimizer]
method = "sngm"
beta = 0.9
batch_size = 1

[schedule]
base_lr = 0.005

[run]
seed = 3
steps = 400
record_every = 10
)";

}  // namespace

TEST_CASE("plan subcommand prints the prescription") {
  const CliRun r = invoke({"plan", "corollary2", "--c", "65536"});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("B=256") != std::string::npos);
  CHECK(r.out.find("eta=0.0625") != std::string::npos);
  CHECK(r.out.find("T=256") != std::string::npos);
}

TEST_CASE("plan corollary1 needs its constants") {
  const CliRun missing = invoke({"plan", "corollary1", "--c", "100"});
  CHECK(missing.exit_code == 1);

  const CliRun ok = invoke({"plan", "corollary1", "--c", "100", "--sigma", "1",
                            "--l", "1", "--gap", "0.5"});
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("B=10") != std::string::npos);
  CHECK(ok.out.find("bound=") != std::string::npos);
}

TEST_CASE("plan corollary3 reports infeasible budgets") {
  const CliRun bad = invoke({"plan", "corollary3", "--c", "256", "--lambda", "1"});
  CHECK(bad.exit_code == 1);
  CHECK(bad.err.find("4096") != std::string::npos);

  const CliRun ok = invoke({"plan", "corollary3", "--c", "4096", "--lambda", "1"});
  CHECK(ok.exit_code == 0);
  CHECK(ok.out.find("B=64") != std::string::npos);
  CHECK(ok.out.find("eta=0.125") != std::string::npos);
}

TEST_CASE("run reports a missing config as a validation error") {
  const CliRun r = invoke({"run", "/tmp/definitely_missing_config.toml"});
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("cannot open") != std::string::npos);
}

TEST_CASE("unknown subcommands exit with usage") {
  const CliRun r = invoke({"frobnicate"});
  CHECK(r.exit_code == 1);
  CHECK(!r.err.empty());
}

TEST_CASE("run executes a config and reports progress") {
  const std::string path = write_config("exp_run.toml", kExpConfig);
  const CliRun r = invoke({"run", path});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("final_full_loss=") != std::string::npos);
}

TEST_CASE("run signals divergence through its exit code") {
  const char* diverging = R"(
[problem]
kind = "quadratic"
spectrum = logspace:1:100:20
samples = 64
center_scale = 0.25
seed = 12

[optimizer]
method = "msgd"
beta = 0.9
batch_size = 256

[schedule]
base_lr = 1.0

[run]
seed = 4
budget = 65536
)";
  const std::string path = write_config("diverge.toml", diverging);
  const CliRun r = invoke({"run", path});
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("diverged at t=") != std::string::npos);
}

TEST_CASE("estimate relaxed recovers the exponential growth rate") {
  const std::string path = write_config("exp_est.toml", kExpConfig);
  const CliRun r = invoke({"estimate", "relaxed", path, "--points", "25"});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("lambda=") != std::string::npos);
  const auto pos = r.out.find("lambda=");
  const double lambda = std::stod(r.out.substr(pos + 7));
  CHECK(lambda == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("check bounds flags a satisfied bound") {
  const char* quad = R"(
[problem]
kind = "quadratic"
spectrum = 1,4
samples = 32
identical_centers = true
seed = 90

[optimizer]
method = "sngm"
beta = 0

[run]
seed = 6
budget = 1024
plan = "corollary2"
record_every = 1
)";
  const std::string path = write_config("quad_check.toml", quad);
  const CliRun r = invoke({"check", "bounds", path});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("avg_grad_norm=") != std::string::npos);
  CHECK(r.out.find("bound_rhs=") != std::string::npos);
  CHECK(r.out.find("PASS") != std::string::npos);
}

TEST_CASE("compare runs several configs at one budget") {
  const char* base = R"(
[problem]
kind = "quadratic"
spectrum = logspace:1:32:20
samples = 64
center_scale = 0.02
seed = 555

[optimizer]
method = "%METHOD%"
beta = 0.9
batch_size = %BATCH%

[schedule]
kind = "poly"
power = 2
base_lr = %LR%

[run]
seed = 11
budget = 65536
record_every = 512
)";
  auto instantiate = [&](const std::string& method, const std::string& batch,
                         const std::string& lr, const std::string& name) {
    std::string text = base;
    text.replace(text.find("%METHOD%"), 8, method);
    text.replace(text.find("%BATCH%"), 7, batch);
    text.replace(text.find("%LR%"), 4, lr);
    return write_config(name, text);
  };
  const std::string a = instantiate("msgd", "16", "0.0625", "cmp_a.toml");
  const std::string b = instantiate("sngm", "256", "0.0625", "cmp_b.toml");
  const CliRun r = invoke({"compare", a, b});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("budget C = 65536") != std::string::npos);
  CHECK(r.out.find("msgd") != std::string::npos);
  CHECK(r.out.find("sngm") != std::string::npos);
}

TEST_CASE("estimate L and sigma report lower bounds") {
  const char* quad = R"(
[problem]
kind = "quadratic"
spectrum = 1,100
samples = 8
center_scale = 0.25
seed = 13

[optimizer]
method = "sngd"
batch_size = 4

[schedule]
base_lr = 0.1

[run]
seed = 5
steps = 4
)";
  const std::string path = write_config("quad_est.toml", quad);

  const CliRun l = invoke({"estimate", "L", path, "--trials", "40"});
  CHECK(l.exit_code == 0);
  CHECK(l.out.find("L_estimate=") != std::string::npos);
  CHECK(l.out.find("L_known=100") != std::string::npos);

  const CliRun sigma = invoke({"estimate", "sigma", path, "--points", "5"});
  CHECK(sigma.exit_code == 0);
  CHECK(sigma.out.find("sigma_estimate=") != std::string::npos);
}

TEST_CASE("compare rejects mismatched budgets") {
  const char* a = R"(
[problem]
kind = "exp"
a = 1.0

[optimizer]
method = "sngd"
batch_size = 1

[schedule]
base_lr = 0.01

[run]
seed = 1
budget = 100
)";
  std::string b_text = a;
  b_text.replace(b_text.find("budget = 100"), 12, "budget = 200");
  const std::string pa = write_config("cmp_mismatch_a.toml", a);
  const std::string pb = write_config("cmp_mismatch_b.toml", b_text);
  const CliRun r = invoke({"compare", pa, pb});
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("budget") != std::string::npos);
}

TEST_CASE("check bounds estimates the gap when no optimum is known") {
  // logistic regression has no closed-form minimum: the gap falls back to
  // best-observed loss and is labeled an optimistic estimate
  const char* logistic = R"(
[problem]
kind = "logistic"
data = "data/toy_binary.csv"
seed = 14

[optimizer]
method = "sngm"
beta = 0.9
batch_size = 12

[schedule]
base_lr = 0.05

[run]
seed = 15
steps = 200
record_every = 1
)";
  const std::string path = write_config("logistic_check.toml", logistic);
  const CliRun r = invoke({"check", "bounds", path});
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("optimistic estimate") != std::string::npos);
  CHECK(r.out.find("bound_rhs=") != std::string::npos);
}
