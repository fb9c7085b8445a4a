#include "sngm/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sngm/errors.hpp"

namespace sngm {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Raw parsed file: section -> key -> (value, line). Values keep their textual
// form; typing happens at extraction time.
struct RawConfig {
  std::map<std::string, std::map<std::string, std::pair<std::string, std::size_t>>> sections;
  std::string origin;
};

RawConfig parse_raw(const std::string& text, const std::string& origin) {
  RawConfig raw;
  raw.origin = origin;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError(origin + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty section name");
      }
      raw.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    if (section.empty()) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": key outside any section");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": empty key");
    }
    auto& sec = raw.sections[section];
    if (sec.count(key)) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    sec.emplace(key, std::make_pair(value, lineno));
  }
  return raw;
}

// Typed accessor over one section that records which keys were consumed so
// leftovers can be rejected.
class Section {
 public:
  Section(const RawConfig& raw, const std::string& name) : raw_(raw), name_(name) {
    auto it = raw.sections.find(name);
    if (it != raw.sections.end()) entries_ = &it->second;
  }

  bool present() const { return entries_ != nullptr; }

  std::optional<std::string> get_string(const std::string& key) {
    if (!entries_) return std::nullopt;
    auto it = entries_->find(key);
    if (it == entries_->end()) return std::nullopt;
    consumed_.insert(key);
    return it->second.first;
  }

  std::optional<double> get_double(const std::string& key) {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    char* end = nullptr;
    const double v = std::strtod(s->c_str(), &end);
    if (end == s->c_str() || *end != '\0' || !std::isfinite(v)) {
      fail(key, "expected a number, got '" + *s + "'");
    }
    return v;
  }

  std::optional<std::uint64_t> get_u64(const std::string& key) {
    auto v = get_double(key);
    if (!v) return std::nullopt;
    if (*v < 0.0 || *v != std::floor(*v)) fail(key, "expected a nonnegative integer");
    return static_cast<std::uint64_t>(*v);
  }

  std::optional<bool> get_bool(const std::string& key) {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    if (*s == "true") return true;
    if (*s == "false") return false;
    fail(key, "expected true or false");
    return std::nullopt;
  }

  // Comma-separated list of numbers, or logspace:lo:hi:count.
  std::optional<std::vector<double>> get_double_list(const std::string& key) {
    auto s = get_string(key);
    if (!s) return std::nullopt;
    std::vector<double> out;
    if (s->rfind("logspace:", 0) == 0) {
      std::stringstream ss(s->substr(9));
      std::string piece;
      std::vector<double> parts;
      while (std::getline(ss, piece, ':')) parts.push_back(std::strtod(piece.c_str(), nullptr));
      if (parts.size() != 3 || !(parts[0] > 0.0) || !(parts[1] > 0.0) || parts[2] < 1.0) {
        fail(key, "expected logspace:lo:hi:count with positive lo, hi");
      }
      const auto count = static_cast<std::size_t>(parts[2]);
      for (std::size_t i = 0; i < count; ++i) {
        const double frac = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
        out.push_back(parts[0] * std::pow(parts[1] / parts[0], frac));
      }
      return out;
    }
    std::stringstream ss(*s);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
      piece = trim(piece);
      char* end = nullptr;
      const double v = std::strtod(piece.c_str(), &end);
      if (end == piece.c_str() || *end != '\0') fail(key, "expected a comma-separated number list");
      out.push_back(v);
    }
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  std::optional<std::vector<std::uint64_t>> get_u64_list(const std::string& key) {
    auto values = get_double_list(key);
    if (!values) return std::nullopt;
    std::vector<std::uint64_t> out;
    for (double v : *values) {
      if (v < 0.0 || v != std::floor(v)) fail(key, "expected nonnegative integers");
      out.push_back(static_cast<std::uint64_t>(v));
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& message) const {
    std::size_t line = 0;
    if (entries_) {
      auto it = entries_->find(key);
      if (it != entries_->end()) line = it->second.second;
    }
    throw ValidationError(raw_.origin + ":" + std::to_string(line) + ": [" + name_ +
                          "] " + key + ": " + message);
  }

  void reject_unconsumed() const {
    if (!entries_) return;
    for (const auto& [key, value] : *entries_) {
      if (!consumed_.count(key)) {
        throw ValidationError(raw_.origin + ":" + std::to_string(value.second) +
                              ": unknown key '" + key + "' in section [" + name_ + "]");
      }
    }
  }

 private:
  const RawConfig& raw_;
  std::string name_;
  const std::map<std::string, std::pair<std::string, std::size_t>>* entries_ = nullptr;
  std::set<std::string> consumed_;
};

ProblemKind parse_problem_kind(const std::string& s) {
  if (s == "quadratic") return ProblemKind::Quadratic;
  if (s == "logistic") return ProblemKind::Logistic;
  if (s == "exp") return ProblemKind::Exp;
  if (s == "mlp") return ProblemKind::Mlp;
  throw ValidationError("unknown problem kind '" + s + "' (expected quadratic|logistic|exp|mlp)");
}

PlanMode parse_plan_mode(const std::string& s) {
  if (s == "manual") return PlanMode::Manual;
  if (s == "corollary1") return PlanMode::Corollary1;
  if (s == "corollary2") return PlanMode::Corollary2;
  if (s == "corollary3") return PlanMode::Corollary3;
  throw ValidationError("unknown plan mode '" + s + "'");
}

PlotMetric parse_plot_metric(const std::string& s) {
  if (s == "full_loss") return PlotMetric::FullLoss;
  if (s == "batch_loss") return PlotMetric::BatchLoss;
  if (s == "grad_norm") return PlotMetric::GradNorm;
  if (s == "momentum_norm") return PlotMetric::MomentumNorm;
  throw ValidationError("unknown plot metric '" + s + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  const RawConfig raw = parse_raw(text, origin);

  static const std::set<std::string> known_sections = {"problem", "optimizer", "schedule",
                                                       "run", "output"};
  for (const auto& [name, entries] : raw.sections) {
    if (!known_sections.count(name)) {
      throw ValidationError(origin + ": unknown section [" + name + "]");
    }
  }

  ExperimentConfig cfg;
  cfg.source_path = origin;

  Section problem(raw, "problem");
  if (!problem.present()) throw ValidationError(origin + ": missing [problem] section");
  {
    auto kind = problem.get_string("kind");
    if (!kind) throw ValidationError(origin + ": [problem] kind is required");
    cfg.problem.kind = parse_problem_kind(*kind);
    if (auto v = problem.get_u64("seed")) cfg.problem.seed = *v;

    switch (cfg.problem.kind) {
      case ProblemKind::Quadratic: {
        auto spectrum = problem.get_double_list("spectrum");
        if (!spectrum) throw ValidationError(origin + ": quadratic needs spectrum");
        cfg.problem.spectrum = *spectrum;
        if (auto v = problem.get_u64("samples")) cfg.problem.samples = *v;
        if (auto v = problem.get_double("center_scale")) cfg.problem.center_scale = *v;
        if (auto v = problem.get_bool("identical_centers")) cfg.problem.identical_centers = *v;
        if (auto v = problem.get_double("start_offset")) cfg.problem.start_offset = *v;
        break;
      }
      case ProblemKind::Exp: {
        if (auto v = problem.get_double("a")) cfg.problem.exp_rate = *v;
        if (auto v = problem.get_double("start")) cfg.problem.exp_start = *v;
        break;
      }
      case ProblemKind::Logistic:
      case ProblemKind::Mlp: {
        auto path = problem.get_string("data");
        if (!path) throw ValidationError(origin + ": data path is required");
        cfg.problem.data_path = *path;
        if (auto v = problem.get_string("format")) {
          if (*v == "csv") cfg.problem.data_format = DataFormat::Csv;
          else if (*v == "cifar10") cfg.problem.data_format = DataFormat::Cifar10;
          else problem.fail("format", "expected csv or cifar10");
        }
        if (auto v = problem.get_u64("limit")) cfg.problem.record_limit = *v;
        if (auto v = problem.get_double("l2")) cfg.problem.l2 = *v;
        if (auto v = problem.get_double("holdout_fraction")) cfg.problem.holdout_fraction = *v;
        if (cfg.problem.kind == ProblemKind::Mlp) {
          auto layout = problem.get_u64_list("layout");
          if (!layout) throw ValidationError(origin + ": mlp needs layout");
          cfg.problem.layout.assign(layout->begin(), layout->end());
          if (auto v = problem.get_string("activation")) {
            if (*v == "tanh") cfg.problem.activation = Activation::Tanh;
            else if (*v == "relu") cfg.problem.activation = Activation::Relu;
            else problem.fail("activation", "expected tanh or relu");
          }
        }
        break;
      }
    }
    problem.reject_unconsumed();
  }

  Section optimizer(raw, "optimizer");
  if (!optimizer.present()) throw ValidationError(origin + ": missing [optimizer] section");
  {
    auto method = optimizer.get_string("method");
    if (!method) throw ValidationError(origin + ": [optimizer] method is required");
    cfg.optimizer.method = parse_method(*method);
    const auto beta_given = optimizer.get_double("beta");
    if (beta_given) cfg.optimizer.beta = *beta_given;
    if (cfg.optimizer.method == Method::Sngd) {
      if (beta_given && *beta_given != 0.0) {
        throw ValidationError(origin + ": sngd has beta = 0 by definition");
      }
      cfg.optimizer.beta = 0.0;
    }
    if (auto v = optimizer.get_double("weight_decay")) cfg.optimizer.weight_decay = *v;
    if (auto v = optimizer.get_bool("decay_before_norm")) cfg.optimizer.decay_before_norm = *v;
    if (auto v = optimizer.get_double("trust")) cfg.optimizer.trust = *v;
    if (auto v = optimizer.get_double("lars_epsilon")) cfg.optimizer.lars_epsilon = *v;
    if (auto v = optimizer.get_u64("batch_size")) cfg.optimizer.batch = *v;
    if (auto v = optimizer.get_u64("micro_batch")) cfg.optimizer.micro_batch = *v;
    optimizer.reject_unconsumed();
  }

  Section schedule(raw, "schedule");
  if (schedule.present()) {
    if (auto v = schedule.get_string("kind")) {
      if (*v != "constant" && *v != "poly" && *v != "step") {
        schedule.fail("kind", "expected constant, poly or step");
      }
      cfg.schedule.kind = *v;
    }
    if (auto v = schedule.get_double("base_lr")) cfg.schedule.base_lr = *v;
    if (auto v = schedule.get_double("power")) cfg.schedule.power = *v;
    if (auto v = schedule.get_u64_list("milestones")) cfg.schedule.milestones_epochs = *v;
    if (auto v = schedule.get_double("factor")) cfg.schedule.factor = *v;
    if (auto v = schedule.get_u64("warmup_epochs")) cfg.schedule.warmup_epochs = *v;
    if (auto v = schedule.get_double("warmup_from")) cfg.schedule.warmup_from = *v;
    schedule.reject_unconsumed();
  }

  Section run(raw, "run");
  if (!run.present()) throw ValidationError(origin + ": missing [run] section");
  {
    if (auto v = run.get_u64("seed")) cfg.run.seed = *v;
    if (auto v = run.get_u64("budget")) cfg.run.budget = *v;
    if (auto v = run.get_u64("steps")) cfg.run.steps = *v;
    if (auto v = run.get_u64("record_every")) cfg.run.record_every = *v;
    if (auto v = run.get_string("plan")) cfg.run.plan = parse_plan_mode(*v);
    if (auto v = run.get_double("sigma")) cfg.run.sigma = *v;
    if (auto v = run.get_double("smoothness")) cfg.run.smoothness = *v;
    if (auto v = run.get_double("gap")) cfg.run.gap = *v;
    if (auto v = run.get_double("lambda")) cfg.run.grad_growth = *v;
    if (auto v = run.get_string("regime")) {
      if (*v != "smooth" && *v != "relaxed") run.fail("regime", "expected smooth or relaxed");
      cfg.run.regime = *v;
    }
    run.reject_unconsumed();
  }

  Section output(raw, "output");
  if (output.present()) {
    if (auto v = output.get_string("trace")) cfg.output.trace_path = *v;
    if (auto v = output.get_string("plot")) cfg.output.plot_path = *v;
    if (auto v = output.get_string("plot_metric")) cfg.output.plot_metric = parse_plot_metric(*v);
    output.reject_unconsumed();
  }

  // Cross-field validation.
  if (cfg.run.budget.has_value() == cfg.run.steps.has_value()) {
    throw ValidationError(origin + ": exactly one of [run] budget or steps must be given");
  }
  if (cfg.run.budget && *cfg.run.budget == 0) throw ValidationError(origin + ": empty budget");
  if (cfg.run.steps && *cfg.run.steps == 0) throw ValidationError(origin + ": empty budget");
  if (cfg.run.record_every == 0) throw ValidationError(origin + ": record_every must be >= 1");

  const bool manual = cfg.run.plan == PlanMode::Manual;
  if (manual) {
    if (!cfg.optimizer.batch) {
      throw ValidationError(origin + ": [optimizer] batch_size is required in manual plan mode");
    }
    if (!cfg.schedule.base_lr) {
      throw ValidationError(origin + ": [schedule] base_lr is required in manual plan mode");
    }
  } else {
    if (cfg.optimizer.batch) {
      throw ValidationError(origin + ": batch_size is determined by the plan mode; remove it");
    }
    if (cfg.schedule.base_lr) {
      throw ValidationError(origin + ": base_lr is determined by the plan mode; remove it");
    }
    if (!cfg.run.budget) {
      throw ValidationError(origin + ": plan modes need [run] budget, not steps");
    }
  }
  if (cfg.run.plan == PlanMode::Corollary1 &&
      !(cfg.run.sigma && cfg.run.smoothness && cfg.run.gap)) {
    throw ValidationError(origin + ": corollary1 plan needs sigma, smoothness and gap");
  }
  if (cfg.run.plan == PlanMode::Corollary3 && !cfg.run.grad_growth) {
    throw ValidationError(origin + ": corollary3 plan needs lambda");
  }
  if (cfg.optimizer.micro_batch && cfg.optimizer.batch &&
      *cfg.optimizer.batch % *cfg.optimizer.micro_batch != 0) {
    throw ValidationError(origin + ": micro_batch must divide batch_size");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path);
}

BuiltProblem build_problem(const ProblemSpec& spec) {
  BuiltProblem built;
  SeededRng rng(spec.seed);
  switch (spec.kind) {
    case ProblemKind::Quadratic: {
      const double scale = spec.identical_centers ? 0.0 : spec.center_scale;
      built.problem = make_quadratic(spec.spectrum, spec.samples, rng, scale,
                                     spec.start_offset);
      break;
    }
    case ProblemKind::Exp: {
      built.problem = make_exp_family(spec.exp_rate, spec.exp_start);
      break;
    }
    case ProblemKind::Logistic:
    case ProblemKind::Mlp: {
      DatasetMatrix data = spec.data_format == DataFormat::Csv
                               ? load_csv(spec.data_path)
                               : load_cifar10_binary(spec.data_path, spec.record_limit);
      if (spec.holdout_fraction > 0.0) {
        auto [train, holdout] = split_holdout(data, spec.holdout_fraction);
        data = std::move(train);
        if (holdout.rows > 0) built.holdout = std::move(holdout);
      }
      if (spec.kind == ProblemKind::Logistic) {
        built.problem = make_logistic(data, spec.l2);
      } else {
        built.problem = make_mlp(spec.layout, spec.activation, data);
      }
      break;
    }
  }
  return built;
}

}  // namespace sngm
