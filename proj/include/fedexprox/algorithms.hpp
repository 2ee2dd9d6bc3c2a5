#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "fedexprox/envelope.hpp"
#include "fedexprox/problems.hpp"

namespace fedexprox {

// Server extrapolation policies.
struct ConstantAlpha {
  double value = 1.0;
};
struct OptimalConstantAlpha {};  // 1 / (gamma L_{gamma,tau})
struct GradsAlpha {};            // displacement-diversity ratio
struct GradsPrimeAlpha {};       // GradsAlpha scaled by (1+gamma L_max)/(gamma L_max)
struct StopsAlpha {};            // envelope-suboptimality ratio
struct FedExpAlpha {             // local-GD displacement ratio
  int local_steps = 10;
};
using AlphaPolicy = std::variant<ConstantAlpha, OptimalConstantAlpha,
                                 GradsAlpha, GradsPrimeAlpha, StopsAlpha,
                                 FedExpAlpha>;

// tau-nice sampling without replacement, uniform over subsets of size tau.
// Draw k is a pure function of (seed, k): a partial Fisher-Yates shuffle
// driven by the counter-based stream (seed, k).  Results are ascending.
struct SamplingPlan {
  std::size_t n = 0;
  std::size_t tau = 0;
  std::uint64_t seed = 0;
};
std::vector<std::size_t> sample_tau_nice(const SamplingPlan& plan,
                                         std::uint64_t k);

// One server round from x with the sampled clients S (ascending):
// x + alpha ((1/|S|) sum_{i in S} prox_i(x) - x).
Eigen::VectorXd fedexprox_round(const EnvelopeContext& ctx,
                                const Eigen::VectorXd& x,
                                const std::vector<std::size_t>& sampled,
                                double alpha);
// The same round written through envelope gradients:
// x - alpha gamma (1/|S|) sum_{i in S} grad M_i(x).  Agrees with the
// prox-averaged form to 1e-12; kept as an executable identity check.
Eigen::VectorXd fedexprox_round_envelope_form(
    const EnvelopeContext& ctx, const Eigen::VectorXd& x,
    const std::vector<std::size_t>& sampled, double alpha);

// Adaptive step rules.  An empty result is the converged signal: the
// denominator vanished because the averaged prox step is zero, so the
// caller should halt successfully instead of dividing.
std::optional<double> alpha_grads(const EnvelopeContext& ctx,
                                  const Eigen::VectorXd& x,
                                  const std::vector<std::size_t>& sampled);
std::optional<double> alpha_grads_prime(const EnvelopeContext& ctx,
                                        const Eigen::VectorXd& x,
                                        const std::vector<std::size_t>& sampled,
                                        double l_max);
std::optional<double> alpha_stops(const EnvelopeContext& ctx,
                                  const Eigen::VectorXd& x,
                                  const std::vector<std::size_t>& sampled);
// Displacement ratio sum ||d_i||^2 / ||sum d_i||^2 with a 1e-12 additive
// denominator guard, floored at 1.
double alpha_fedexp(const std::vector<Eigen::VectorXd>& deltas);

struct RoundRecord {
  std::uint64_t k = 0;
  double alpha_used = 0.0;
  std::vector<std::size_t> sampled;
  double f_subopt = 0.0;
  double env_subopt = 0.0;
  double dist_sq = 0.0;
  double wall_time = 0.0;  // seconds; observability only, never serialized
};

enum class RunStatus { completed, converged };

struct AlgorithmConfig {
  AlphaPolicy alpha = ConstantAlpha{1.0};
  double gamma = 1.0;
  std::size_t tau = 0;  // 0 means full participation
  std::uint64_t rounds = 100;
  std::uint64_t seed = 0;
  double halt_tolerance = 1e-14;
  // Validates constant policies against 0 < alpha gamma L_{gamma,tau} < 2.
  bool theory_mode = true;
  Eigen::VectorXd x0;  // empty means the origin
};

struct RunResult {
  std::vector<RoundRecord> trace;
  RunStatus status = RunStatus::completed;
  Eigen::VectorXd final_x;
  // Constants resolved at configuration time, echoed for reporting.
  double l_gamma = 0.0;
  std::optional<double> l_max;
  double l_gamma_tau = 0.0;
  std::optional<double> constant_alpha;  // resolved value for constant policies
};

// Runs K rounds of prox-averaged extrapolation.  Row k holds the metrics
// of the iterate entering round k, the alpha applied in round k, and the
// sampled set; the trace is a pure function of (problem, config).  The
// run halts early, without emitting the row, when f-suboptimality falls
// below halt_tolerance or an adaptive rule signals convergence.  The
// observer, when set, receives each iterate as its row is emitted.
RunResult run(
    const FederatedProblem& problem, const AlgorithmConfig& config,
    const std::function<void(std::uint64_t, const Eigen::VectorXd&)>& observer =
        {});

}  // namespace fedexprox
