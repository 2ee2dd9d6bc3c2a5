#include <cmath>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedexprox/envelope.hpp"
#include "fedexprox/errors.hpp"
#include "fedexprox/harness.hpp"

namespace {

using namespace fedexprox;

int do_run(const std::string& config_path, const std::string& preset,
           const PresetOverrides& overrides) {
  std::vector<ExperimentConfig> configs;
  if (!config_path.empty()) {
    configs.push_back(load_config(config_path));
    if (overrides.out) configs.back().output_dir = *overrides.out;
  } else {
    configs = make_preset(preset, overrides);
  }
  for (const ExperimentConfig& config : configs) {
    const ExperimentResult result = run_experiment(config);
    const auto& run_info = result.meta.at("run");
    std::printf("%s: %s after %llu rounds, final f_subopt=%.3e -> %s\n",
                config.name.c_str(),
                run_info.at("status").get<std::string>().c_str(),
                static_cast<unsigned long long>(
                    run_info.at("rounds_completed").get<std::uint64_t>()),
                run_info.at("final_f_subopt").get<double>(),
                result.csv_path.string().c_str());
  }
  return 0;
}

int do_compare(const std::string& a, const std::string& b, double threshold) {
  const CompareResult result = compare_traces(a, b, threshold);
  const char* status = "neither_reached";
  switch (result.status) {
    case CompareResult::Status::comparable: status = "comparable"; break;
    case CompareResult::Status::a_not_reached: status = "a_not_reached"; break;
    case CompareResult::Status::b_not_reached: status = "b_not_reached"; break;
    case CompareResult::Status::neither_reached: break;
  }
  nlohmann::json j{{"status", status}, {"threshold", threshold}};
  if (result.k_a) j["k_a"] = *result.k_a;
  if (result.k_b) j["k_b"] = *result.k_b;
  if (result.speedup) {
    // JSON has no infinity; an instant second trace reports the string form
    if (std::isinf(*result.speedup)) {
      j["speedup"] = "inf";
    } else {
      j["speedup"] = *result.speedup;
    }
  }
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

int do_rates(const std::string& config_path) {
  const ExperimentConfig config = load_config(config_path);
  const FederatedProblem problem = build_problem(config.problem);
  EnvelopeContext ctx(config.algorithm.gamma, problem.clients());
  const EnvelopeSmoothness smoothness = envelope_smoothness(ctx);
  std::vector<double> client_l;
  if (problem.all_smooth()) {
    for (const auto& l : problem.client_smoothness()) client_l.push_back(*l);
  }
  const std::size_t tau =
      config.algorithm.tau == 0 ? problem.n() : config.algorithm.tau;
  const RateReport report =
      make_rate_report(config.algorithm.gamma, problem.n(), tau,
                       problem.l_max(), smoothness.l_gamma, client_l);
  std::printf("%s\n", rate_report_to_json(report).dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated proximal-optimization laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset;
  PresetOverrides overrides;
  std::string out_dir;
  std::uint64_t rounds = 0;
  std::uint64_t seed = 0;
  std::size_t n_override = 0;
  double theta = 0.0;
  double gamma = 0.0;

  auto* run_cmd = app.add_subcommand("run", "Run configured experiments");
  auto* config_opt =
      run_cmd->add_option("--config", config_path, "Experiment config JSON");
  auto* preset_opt =
      run_cmd->add_option("--preset", preset, "Built-in bundle: fig1, example1");
  config_opt->excludes(preset_opt);
  auto* out_opt = run_cmd->add_option("--out", out_dir, "Output directory");
  auto* rounds_opt = run_cmd->add_option("--rounds", rounds, "Round override");
  auto* seed_opt = run_cmd->add_option("--seed", seed, "Seed override");
  auto* n_opt = run_cmd->add_option("--n", n_override, "Client-count override");
  auto* theta_opt = run_cmd->add_option("--theta", theta, "Curvature override");
  auto* gamma_opt = run_cmd->add_option("--gamma", gamma, "Gamma override");

  std::string csv_a, csv_b;
  double threshold = 0.0;
  auto* compare_cmd =
      app.add_subcommand("compare", "Compare two traces at a threshold");
  compare_cmd->add_option("a", csv_a, "First trace CSV")->required();
  compare_cmd->add_option("b", csv_b, "Second trace CSV")->required();
  compare_cmd->add_option("--threshold", threshold, "f-suboptimality threshold")
      ->required();

  std::string rates_config;
  auto* rates_cmd =
      app.add_subcommand("rates", "Print rate constants for a config");
  rates_cmd->add_option("--config", rates_config, "Experiment config JSON")
      ->required();

  try {
    app.parse(argc, argv);
    if (run_cmd->parsed()) {
      if (config_path.empty() && preset.empty()) {
        throw fedexprox::ContractError("run needs --config or --preset");
      }
      if (*out_opt) overrides.out = out_dir;
      if (*rounds_opt) overrides.rounds = rounds;
      if (*seed_opt) overrides.seed = seed;
      if (*n_opt) overrides.n = n_override;
      if (*theta_opt) overrides.theta = theta;
      if (*gamma_opt) overrides.gamma = gamma;
      return do_run(config_path, preset, overrides);
    }
    if (compare_cmd->parsed()) return do_compare(csv_a, csv_b, threshold);
    if (rates_cmd->parsed()) return do_rates(rates_config);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const fedexprox::ContractError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return 2;
  } catch (const fedexprox::OracleError& e) {
    std::fprintf(stderr, "oracle failure: %s\n", e.what());
    return 3;
  } catch (const fedexprox::GenerationError& e) {
    std::fprintf(stderr, "generation failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
