#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedexprox/algorithms.hpp"
#include "fedexprox/problems.hpp"
#include "fedexprox/theory.hpp"
#include "json.hpp"

namespace fedexprox {

struct ProblemSpec {
  std::string kind;  // regression | example1 | feasibility | file
  std::size_t clients = 0;
  std::size_t rows_per_client = 0;
  Eigen::Index dim = 0;
  std::size_t n = 0;        // example1
  double theta = 1.0;       // example1
  std::uint64_t seed = 0;
  std::string path;         // file
};

struct ExperimentConfig {
  ProblemSpec problem;
  AlgorithmConfig algorithm;
  std::string output_dir = ".";
  std::string name = "run";
};

// "fedexprox-config/v1".  Unknown keys anywhere are a validation error.
ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

FederatedProblem build_problem(const ProblemSpec& spec);

// Trace serialization: header k,f_subopt,env_subopt,dist_sq,alpha_k,sampled;
// floats as shortest round-trip decimals, sampled indices joined by ';'.
// Identical (problem, config) pairs produce byte-identical CSV.
std::string trace_to_csv(const std::vector<RoundRecord>& trace);

struct ExperimentResult {
  std::filesystem::path csv_path;
  std::filesystem::path meta_path;
  nlohmann::json meta;  // "fedexprox-meta/v1"
  RunResult run;
};

// Runs one configured experiment and writes <name>.csv plus
// <name>.meta.json under output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct CompareResult {
  enum class Status { comparable, a_not_reached, b_not_reached, neither_reached };
  Status status = Status::neither_reached;
  std::optional<std::uint64_t> k_a;
  std::optional<std::uint64_t> k_b;
  // (first k reaching the threshold in a) / (first k in b); present only
  // when both traces reach it.
  std::optional<double> speedup;
};

CompareResult compare_traces(const std::filesystem::path& csv_a,
                             const std::filesystem::path& csv_b,
                             double threshold);

struct PresetOverrides {
  std::optional<std::string> out;
  std::optional<std::uint64_t> rounds;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> n;
  std::optional<double> theta;
  std::optional<double> gamma;
};

// Built-in experiment bundles:
//   fig1      six runs on the 30-client, 900-dimensional instance: gamma in
//             {0.01, 0.1, 1} crossed with constant alpha 1 and optimal alpha
//   example1  one run on the separable scalar instance (n=4, theta=1,
//             gamma=1) whose metadata reports the closed-form gain
std::vector<ExperimentConfig> make_preset(const std::string& name,
                                          const PresetOverrides& overrides);

}  // namespace fedexprox
