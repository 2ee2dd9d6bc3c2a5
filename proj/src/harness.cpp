#include "fedexprox/harness.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <system_error>

#include "fedexprox/envelope.hpp"
#include "fedexprox/errors.hpp"

namespace fedexprox {
namespace {

constexpr const char* kCsvHeader = "k,f_subopt,env_subopt,dist_sq,alpha_k,sampled";

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void reject_unknown_keys(const nlohmann::json& j,
                         std::initializer_list<const char*> allowed,
                         const char* where) {
  if (!j.is_object()) {
    throw ContractError(std::string("config: ") + where +
                        " must be a JSON object");
  }
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw ContractError(std::string("config: unknown key \"") + key +
                          "\" in " + where);
    }
  }
}

template <typename T>
T require(const nlohmann::json& j, const char* key, const char* where) {
  if (!j.contains(key)) {
    throw ContractError(std::string("config: missing key \"") + key +
                        "\" in " + where);
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ContractError(std::string("config: key \"") + key + "\" in " +
                        where + " has the wrong type");
  }
}

template <typename T>
T optional_or(const nlohmann::json& j, const char* key, const char* where,
              T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ContractError(std::string("config: key \"") + key + "\" in " +
                        where + " has the wrong type");
  }
}

AlphaPolicy alpha_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"policy", "value", "local_steps"}, "algorithm.alpha");
  const auto policy = require<std::string>(j, "policy", "algorithm.alpha");
  if (policy == "constant") {
    return ConstantAlpha{require<double>(j, "value", "algorithm.alpha")};
  }
  if (policy == "optimal") return OptimalConstantAlpha{};
  if (policy == "grads") return GradsAlpha{};
  if (policy == "grads_prime") return GradsPrimeAlpha{};
  if (policy == "stops") return StopsAlpha{};
  if (policy == "fedexp") {
    return FedExpAlpha{optional_or<int>(j, "local_steps", "algorithm.alpha", 10)};
  }
  throw ContractError("config: unknown alpha policy \"" + policy + "\"");
}

nlohmann::json alpha_to_json(const AlphaPolicy& alpha) {
  if (const auto* c = std::get_if<ConstantAlpha>(&alpha)) {
    return {{"policy", "constant"}, {"value", c->value}};
  }
  if (std::holds_alternative<OptimalConstantAlpha>(alpha)) {
    return {{"policy", "optimal"}};
  }
  if (std::holds_alternative<GradsAlpha>(alpha)) return {{"policy", "grads"}};
  if (std::holds_alternative<GradsPrimeAlpha>(alpha)) {
    return {{"policy", "grads_prime"}};
  }
  if (std::holds_alternative<StopsAlpha>(alpha)) return {{"policy", "stops"}};
  const auto& f = std::get<FedExpAlpha>(alpha);
  return {{"policy", "fedexp"}, {"local_steps", f.local_steps}};
}

ProblemSpec problem_spec_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"kind", "clients", "rows_per_client", "dim", "n",
                       "theta", "seed", "path", "rows_per_set"},
                      "problem");
  ProblemSpec spec;
  spec.kind = require<std::string>(j, "kind", "problem");
  if (spec.kind == "regression") {
    spec.clients = require<std::size_t>(j, "clients", "problem");
    spec.rows_per_client = require<std::size_t>(j, "rows_per_client", "problem");
    spec.dim = require<Eigen::Index>(j, "dim", "problem");
    spec.seed = optional_or<std::uint64_t>(j, "seed", "problem", 0);
  } else if (spec.kind == "example1") {
    spec.n = require<std::size_t>(j, "n", "problem");
    spec.theta = optional_or<double>(j, "theta", "problem", 1.0);
  } else if (spec.kind == "feasibility") {
    spec.clients = require<std::size_t>(j, "clients", "problem");
    spec.rows_per_client = require<std::size_t>(j, "rows_per_set", "problem");
    spec.dim = require<Eigen::Index>(j, "dim", "problem");
    spec.seed = optional_or<std::uint64_t>(j, "seed", "problem", 0);
  } else if (spec.kind == "file") {
    spec.path = require<std::string>(j, "path", "problem");
  } else {
    throw ContractError("config: unknown problem kind \"" + spec.kind + "\"");
  }
  return spec;
}

nlohmann::json problem_spec_to_json(const ProblemSpec& spec) {
  nlohmann::json j{{"kind", spec.kind}};
  if (spec.kind == "regression") {
    j["clients"] = spec.clients;
    j["rows_per_client"] = spec.rows_per_client;
    j["dim"] = spec.dim;
    j["seed"] = spec.seed;
  } else if (spec.kind == "example1") {
    j["n"] = spec.n;
    j["theta"] = spec.theta;
  } else if (spec.kind == "feasibility") {
    j["clients"] = spec.clients;
    j["rows_per_set"] = spec.rows_per_client;
    j["dim"] = spec.dim;
    j["seed"] = spec.seed;
  } else if (spec.kind == "file") {
    j["path"] = spec.path;
  }
  return j;
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j, {"schema", "problem", "algorithm", "output"},
                      "top level");
  if (require<std::string>(j, "schema", "top level") != "fedexprox-config/v1") {
    throw ContractError("config: schema must be fedexprox-config/v1");
  }
  if (!j.contains("problem") || !j.contains("algorithm")) {
    throw ContractError("config: problem and algorithm sections are required");
  }

  ExperimentConfig config;
  config.problem = problem_spec_from_json(j.at("problem"));

  const auto& alg = j.at("algorithm");
  reject_unknown_keys(alg,
                      {"alpha", "gamma", "tau", "rounds", "seed",
                       "halt_tolerance", "theory_mode"},
                      "algorithm");
  if (!alg.contains("alpha")) {
    throw ContractError("config: missing key \"alpha\" in algorithm");
  }
  config.algorithm.alpha = alpha_from_json(alg.at("alpha"));
  config.algorithm.gamma = require<double>(alg, "gamma", "algorithm");
  config.algorithm.tau = optional_or<std::size_t>(alg, "tau", "algorithm", 0);
  config.algorithm.rounds = require<std::uint64_t>(alg, "rounds", "algorithm");
  config.algorithm.seed = optional_or<std::uint64_t>(alg, "seed", "algorithm", 0);
  config.algorithm.halt_tolerance =
      optional_or<double>(alg, "halt_tolerance", "algorithm", 1e-14);
  config.algorithm.theory_mode =
      optional_or<bool>(alg, "theory_mode", "algorithm", true);

  if (j.contains("output")) {
    const auto& out = j.at("output");
    reject_unknown_keys(out, {"directory", "name"}, "output");
    config.output_dir = optional_or<std::string>(out, "directory", "output", ".");
    config.name = optional_or<std::string>(out, "name", "output", "run");
  }
  return config;
}

nlohmann::json config_to_json(const ExperimentConfig& config) {
  return {{"schema", "fedexprox-config/v1"},
          {"problem", problem_spec_to_json(config.problem)},
          {"algorithm",
           {{"alpha", alpha_to_json(config.algorithm.alpha)},
            {"gamma", config.algorithm.gamma},
            {"tau", config.algorithm.tau},
            {"rounds", config.algorithm.rounds},
            {"seed", config.algorithm.seed},
            {"halt_tolerance", config.algorithm.halt_tolerance},
            {"theory_mode", config.algorithm.theory_mode}}},
          {"output",
           {{"directory", config.output_dir}, {"name", config.name}}}};
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& err) {
    throw ContractError("config: parse failure: " + std::string(err.what()));
  }
  return config_from_json(j);
}

FederatedProblem build_problem(const ProblemSpec& spec) {
  if (spec.kind == "regression") {
    return gen_regression(spec.clients, spec.rows_per_client, spec.dim,
                          spec.seed);
  }
  if (spec.kind == "example1") return gen_example1(spec.n, spec.theta);
  if (spec.kind == "feasibility") {
    return gen_feasibility(spec.clients, spec.rows_per_client, spec.dim,
                           spec.seed);
  }
  if (spec.kind == "file") return load_problem(spec.path);
  throw ContractError("unknown problem kind \"" + spec.kind + "\"");
}

std::string trace_to_csv(const std::vector<RoundRecord>& trace) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const RoundRecord& r : trace) {
    out += std::to_string(r.k);
    out += ',';
    out += format_double(r.f_subopt);
    out += ',';
    out += format_double(r.env_subopt);
    out += ',';
    out += format_double(r.dist_sq);
    out += ',';
    out += format_double(r.alpha_used);
    out += ',';
    for (std::size_t j = 0; j < r.sampled.size(); ++j) {
      if (j > 0) out += ';';
      out += std::to_string(r.sampled[j]);
    }
    out += '\n';
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const FederatedProblem problem = build_problem(config.problem);
  RunResult run_result = run(problem, config.algorithm);

  const std::size_t n = problem.n();
  const std::size_t tau =
      config.algorithm.tau == 0 ? n : config.algorithm.tau;
  std::vector<double> client_l;
  if (problem.all_smooth()) {
    client_l.reserve(n);
    for (const auto& l : problem.client_smoothness()) client_l.push_back(*l);
  }
  const RateReport report =
      make_rate_report(config.algorithm.gamma, n, tau, problem.l_max(),
                       run_result.l_gamma, client_l);

  double wall_total = 0.0;
  for (const auto& r : run_result.trace) wall_total += r.wall_time;

  nlohmann::json deviations = nlohmann::json::array();
  if (std::holds_alternative<FedExpAlpha>(config.algorithm.alpha)) {
    deviations.push_back(
        "local-GD displacement rule: 1e-12 additive denominator guard, ratio "
        "floored at 1");
  }

  nlohmann::json meta{
      {"schema", "fedexprox-meta/v1"},
      {"library_version", FEDEXPROX_VERSION},
      {"config", config_to_json(config)},
      {"generator", problem_spec_to_json(config.problem)},
      {"reference_solver", "min-norm-direct"},
      {"constants", rate_report_to_json(report)},
      {"run",
       {{"status", run_result.status == RunStatus::converged ? "converged"
                                                             : "completed"},
        {"rounds_completed", run_result.trace.size()},
        {"final_f_subopt",
         problem.objective(run_result.final_x) - problem.f_star()},
        {"final_dist_sq",
         problem.solution_set().distance_squared(run_result.final_x)},
        {"wall_time_total", wall_total}}},
      {"deviations", std::move(deviations)}};
  if (run_result.constant_alpha) {
    meta["run"]["constant_alpha"] = *run_result.constant_alpha;
  }

  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  ExperimentResult result;
  result.csv_path = dir / (config.name + ".csv");
  result.meta_path = dir / (config.name + ".meta.json");
  {
    std::ofstream csv(result.csv_path, std::ios::binary);
    if (!csv) {
      throw ContractError("cannot open " + result.csv_path.string() +
                          " for writing");
    }
    csv << trace_to_csv(run_result.trace);
  }
  {
    std::ofstream mj(result.meta_path, std::ios::binary);
    if (!mj) {
      throw ContractError("cannot open " + result.meta_path.string() +
                          " for writing");
    }
    mj << meta.dump(2) << '\n';
  }
  result.meta = std::move(meta);
  result.run = std::move(run_result);
  return result;
}

namespace {

// First k whose f_subopt is at or below the threshold, or empty.
std::optional<std::uint64_t> first_k_reaching(const std::filesystem::path& path,
                                              double threshold) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ContractError(path.string() + ": unexpected CSV header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw ContractError(path.string() + ": malformed CSV row");
    }
    std::uint64_t k = 0;
    const auto kr = std::from_chars(line.data(), line.data() + c1, k);
    if (kr.ec != std::errc()) {
      throw ContractError(path.string() + ": malformed round index");
    }
    const std::string field = line.substr(c1 + 1, c2 - c1 - 1);
    const double f = std::strtod(field.c_str(), nullptr);
    if (f <= threshold) return k;
  }
  return std::nullopt;
}

}  // namespace

CompareResult compare_traces(const std::filesystem::path& csv_a,
                             const std::filesystem::path& csv_b,
                             double threshold) {
  CompareResult result;
  result.k_a = first_k_reaching(csv_a, threshold);
  result.k_b = first_k_reaching(csv_b, threshold);
  if (result.k_a && result.k_b) {
    result.status = CompareResult::Status::comparable;
    if (*result.k_a == 0 && *result.k_b == 0) {
      result.speedup = 1.0;
    } else if (*result.k_b == 0) {
      result.speedup = std::numeric_limits<double>::infinity();
    } else {
      result.speedup = static_cast<double>(*result.k_a) /
                       static_cast<double>(*result.k_b);
    }
  } else if (result.k_a) {
    result.status = CompareResult::Status::b_not_reached;
  } else if (result.k_b) {
    result.status = CompareResult::Status::a_not_reached;
  } else {
    result.status = CompareResult::Status::neither_reached;
  }
  return result;
}

std::vector<ExperimentConfig> make_preset(const std::string& name,
                                          const PresetOverrides& overrides) {
  std::vector<ExperimentConfig> configs;
  const std::string out = overrides.out.value_or("out");
  if (name == "fig1") {
    const std::vector<double> gammas =
        overrides.gamma ? std::vector<double>{*overrides.gamma}
                        : std::vector<double>{0.01, 0.1, 1.0};
    for (double gamma : gammas) {
      for (bool extrapolated : {false, true}) {
        ExperimentConfig c;
        c.problem.kind = "regression";
        c.problem.clients = 30;
        c.problem.rows_per_client = 20;
        c.problem.dim = 900;
        c.problem.seed = overrides.seed.value_or(1);
        c.algorithm.alpha = extrapolated ? AlphaPolicy(OptimalConstantAlpha{})
                                         : AlphaPolicy(ConstantAlpha{1.0});
        c.algorithm.gamma = gamma;
        c.algorithm.rounds = overrides.rounds.value_or(10000);
        c.output_dir = out;
        c.name = "fig1_gamma_" + format_double(gamma) +
                 (extrapolated ? "_fedexprox" : "_fedprox");
        configs.push_back(std::move(c));
      }
    }
    return configs;
  }
  if (name == "example1") {
    ExperimentConfig c;
    c.problem.kind = "example1";
    c.problem.n = overrides.n.value_or(4);
    c.problem.theta = overrides.theta.value_or(1.0);
    c.algorithm.alpha = OptimalConstantAlpha{};
    c.algorithm.gamma = overrides.gamma.value_or(1.0);
    c.algorithm.rounds = overrides.rounds.value_or(100);
    c.output_dir = out;
    c.name = "example1";
    configs.push_back(std::move(c));
    return configs;
  }
  throw ContractError("unknown preset \"" + name +
                      "\"; available: fig1, example1");
}

}  // namespace fedexprox
