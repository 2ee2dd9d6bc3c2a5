#include "fedexprox/algorithms.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "fedexprox/errors.hpp"
#include "fedexprox/rng.hpp"
#include "fedexprox/theory.hpp"

namespace fedexprox {
namespace {

void check_alpha_positive(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ContractError("alpha must be positive and finite");
  }
}

void check_sampled(const std::vector<std::size_t>& sampled, std::size_t n) {
  if (sampled.empty()) throw ContractError("sampled set must be non-empty");
  for (std::size_t j = 0; j < sampled.size(); ++j) {
    if (sampled[j] >= n) {
      throw ContractError("sampled index " + std::to_string(sampled[j]) +
                          " out of range for " + std::to_string(n) +
                          " clients");
    }
    if (j > 0 && sampled[j] <= sampled[j - 1]) {
      throw ContractError("sampled set must be strictly ascending");
    }
  }
}

// Average of prox_i(x) over the sampled set, accumulated in ascending
// client order.
Eigen::VectorXd prox_average(const EnvelopeContext& ctx,
                             const Eigen::VectorXd& x,
                             const std::vector<std::size_t>& sampled) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i : sampled) sum += prox(ctx.client(i), ctx.gamma(), x);
  return Eigen::VectorXd(sum / static_cast<double>(sampled.size()));
}

// t gradient-descent steps on a smooth client from x at the given rate.
Eigen::VectorXd local_gradient_descent(const QuadraticObjective& q,
                                       const Eigen::VectorXd& x, int steps,
                                       double rate) {
  Eigen::VectorXd y = x;
  for (int s = 0; s < steps; ++s) {
    y -= rate * (q.A().transpose() * (q.A() * y - q.b()));
  }
  return y;
}

}  // namespace

std::vector<std::size_t> sample_tau_nice(const SamplingPlan& plan,
                                         std::uint64_t k) {
  if (plan.n < 1) throw ContractError("sampling plan needs n >= 1");
  if (plan.tau < 1 || plan.tau > plan.n) {
    throw ContractError("sampling plan needs tau in [1, " +
                        std::to_string(plan.n) + "], got " +
                        std::to_string(plan.tau));
  }
  std::vector<std::size_t> idx(plan.n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (plan.tau == plan.n) return idx;  // the only subset of size n
  PhiloxStream g(plan.seed, k);
  for (std::size_t j = 0; j < plan.tau; ++j) {
    const std::size_t r = j + g.below(plan.n - j);
    std::swap(idx[j], idx[r]);
  }
  idx.resize(plan.tau);
  std::sort(idx.begin(), idx.end());
  return idx;
}

Eigen::VectorXd fedexprox_round(const EnvelopeContext& ctx,
                                const Eigen::VectorXd& x,
                                const std::vector<std::size_t>& sampled,
                                double alpha) {
  check_alpha_positive(alpha);
  check_sampled(sampled, ctx.n());
  const Eigen::VectorXd pbar = prox_average(ctx, x, sampled);
  return x + alpha * (pbar - x);
}

Eigen::VectorXd fedexprox_round_envelope_form(
    const EnvelopeContext& ctx, const Eigen::VectorXd& x,
    const std::vector<std::size_t>& sampled, double alpha) {
  check_alpha_positive(alpha);
  check_sampled(sampled, ctx.n());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i : sampled) sum += moreau_grad(ctx, i, x);
  return x - (alpha * ctx.gamma() / static_cast<double>(sampled.size())) * sum;
}

std::optional<double> alpha_grads(const EnvelopeContext& ctx,
                                  const Eigen::VectorXd& x,
                                  const std::vector<std::size_t>& sampled) {
  check_sampled(sampled, ctx.n());
  const double tau = static_cast<double>(sampled.size());
  double num = 0.0;
  Eigen::VectorXd mean_step = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i : sampled) {
    const Eigen::VectorXd step = x - prox(ctx.client(i), ctx.gamma(), x);
    num += step.squaredNorm();
    mean_step += step;
  }
  num /= tau;
  mean_step /= tau;
  const double den = mean_step.squaredNorm();
  if (den < 1e-24) return std::nullopt;
  return num / den;
}

std::optional<double> alpha_grads_prime(const EnvelopeContext& ctx,
                                        const Eigen::VectorXd& x,
                                        const std::vector<std::size_t>& sampled,
                                        double l_max) {
  if (!(l_max > 0.0) || !std::isfinite(l_max)) {
    throw ContractError("alpha_grads_prime requires L_max > 0");
  }
  const auto base = alpha_grads(ctx, x, sampled);
  if (!base) return std::nullopt;
  return *base * (1.0 + ctx.gamma() * l_max) / (ctx.gamma() * l_max);
}

std::optional<double> alpha_stops(const EnvelopeContext& ctx,
                                  const Eigen::VectorXd& x,
                                  const std::vector<std::size_t>& sampled) {
  check_sampled(sampled, ctx.n());
  const double tau = static_cast<double>(sampled.size());
  double num = 0.0;
  Eigen::VectorXd mean_grad = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i : sampled) {
    num += moreau_value(ctx, i, x) - ctx.client_envelope_infimum(i);
    mean_grad += moreau_grad(ctx, i, x);
  }
  num /= tau;
  mean_grad /= tau;
  const double den = ctx.gamma() * mean_grad.squaredNorm();
  if (den < 1e-24) return std::nullopt;
  return num / den;
}

double alpha_fedexp(const std::vector<Eigen::VectorXd>& deltas) {
  if (deltas.empty()) {
    throw ContractError("displacement rule needs at least one delta");
  }
  double num = 0.0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(deltas.front().size());
  for (const auto& d : deltas) {
    if (d.size() != sum.size()) {
      throw ContractError("displacement rule: deltas disagree in dimension");
    }
    num += d.squaredNorm();
    sum += d;
  }
  const double ratio = num / (sum.squaredNorm() + 1e-12);
  return std::max(1.0, ratio);
}

RunResult run(
    const FederatedProblem& problem, const AlgorithmConfig& config,
    const std::function<void(std::uint64_t, const Eigen::VectorXd&)>& observer) {
  if (!(config.gamma > 0.0) || !std::isfinite(config.gamma)) {
    throw ContractError("run requires gamma > 0");
  }
  if (config.halt_tolerance < 0.0) {
    throw ContractError("run requires halt_tolerance >= 0");
  }
  if (!problem.interpolated()) {
    throw ContractError(
        "run requires an interpolated problem; suboptimality metrics are "
        "defined against the common minimizer set");
  }
  const std::size_t n = problem.n();
  const std::size_t tau = config.tau == 0 ? n : config.tau;
  if (tau < 1 || tau > n) {
    throw ContractError("tau must lie in [1, " + std::to_string(n) + "], got " +
                        std::to_string(tau));
  }

  EnvelopeContext ctx(config.gamma, problem.clients());
  const EnvelopeSmoothness smoothness = envelope_smoothness(ctx);
  const std::optional<double> l_max = problem.l_max();
  const double lgt =
      l_max ? l_gamma_tau(config.gamma, n, tau, *l_max, smoothness.l_gamma)
            : l_gamma_tau_nonsmooth(config.gamma, n, tau, smoothness.l_gamma);

  RunResult result;
  result.l_gamma = smoothness.l_gamma;
  result.l_max = l_max;
  result.l_gamma_tau = lgt;

  if (std::holds_alternative<GradsPrimeAlpha>(config.alpha) && !l_max) {
    throw ContractError(
        "the scaled displacement-diversity rule needs smooth clients");
  }
  if (std::holds_alternative<FedExpAlpha>(config.alpha)) {
    if (!l_max) {
      throw ContractError("the local-GD displacement rule needs smooth clients");
    }
    if (std::get<FedExpAlpha>(config.alpha).local_steps < 1) {
      throw ContractError("local_steps must be at least 1");
    }
  }
  if (const auto* c = std::get_if<ConstantAlpha>(&config.alpha)) {
    check_alpha_positive(c->value);
    if (config.theory_mode && !(c->value * config.gamma * lgt < 2.0)) {
      throw ContractError(
          "constant alpha " + std::to_string(c->value) +
          " is outside the admissible range (0, " +
          std::to_string(2.0 / (config.gamma * lgt)) + ")");
    }
    result.constant_alpha = c->value;
  } else if (std::holds_alternative<OptimalConstantAlpha>(config.alpha)) {
    result.constant_alpha = optimal_alpha(config.gamma, lgt);
  }

  Eigen::VectorXd x;
  if (config.x0.size() == 0) {
    x = Eigen::VectorXd::Zero(problem.d());
  } else if (config.x0.size() == problem.d()) {
    x = config.x0;
  } else {
    throw ContractError("x0 has dimension " + std::to_string(config.x0.size()) +
                        ", problem expects " + std::to_string(problem.d()));
  }

  const SamplingPlan plan{n, tau, config.seed};
  const double f_star = problem.f_star();
  const double env_inf = ctx.average_envelope_infimum();
  result.status = RunStatus::completed;

  for (std::uint64_t k = 0; k < config.rounds; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const double f_subopt = problem.objective(x) - f_star;
    if (f_subopt < config.halt_tolerance) {
      result.status = RunStatus::converged;
      break;
    }
    const std::vector<std::size_t> sampled = sample_tau_nice(plan, k);

    double alpha = 0.0;
    Eigen::VectorXd direction;
    if (const auto* fedexp = std::get_if<FedExpAlpha>(&config.alpha)) {
      const double rate =
          1.0 / (6.0 * static_cast<double>(fedexp->local_steps) * *l_max);
      std::vector<Eigen::VectorXd> deltas;
      deltas.reserve(sampled.size());
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.size());
      for (std::size_t i : sampled) {
        const auto& q = std::get<QuadraticObjective>(problem.client(i).term);
        deltas.push_back(
            x - local_gradient_descent(q, x, fedexp->local_steps, rate));
        sum += deltas.back();
      }
      alpha = alpha_fedexp(deltas);
      direction = -sum / static_cast<double>(sampled.size());
    } else {
      std::optional<double> adaptive;
      if (std::holds_alternative<GradsAlpha>(config.alpha)) {
        adaptive = alpha_grads(ctx, x, sampled);
      } else if (std::holds_alternative<GradsPrimeAlpha>(config.alpha)) {
        adaptive = alpha_grads_prime(ctx, x, sampled, *l_max);
      } else if (std::holds_alternative<StopsAlpha>(config.alpha)) {
        adaptive = alpha_stops(ctx, x, sampled);
      } else {
        adaptive = *result.constant_alpha;
      }
      if (!adaptive) {
        result.status = RunStatus::converged;
        break;
      }
      alpha = *adaptive;
      const Eigen::VectorXd pbar = prox_average(ctx, x, sampled);
      direction = pbar - x;
    }

    RoundRecord record;
    record.k = k;
    record.alpha_used = alpha;
    record.sampled = sampled;
    record.f_subopt = f_subopt;
    record.env_subopt = average_envelope_value(ctx, x) - env_inf;
    record.dist_sq = problem.solution_set().distance_squared(x);
    record.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.trace.push_back(std::move(record));
    if (observer) observer(k, x);
    x = x + alpha * direction;
  }

  result.final_x = std::move(x);
  return result;
}

}  // namespace fedexprox
