#include "fedexprox/theory.hpp"

#include <cmath>
#include <string>

#include "fedexprox/errors.hpp"

namespace fedexprox {
namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ContractError("gamma must be positive");
  }
}

void check_tau(std::size_t n, std::size_t tau) {
  if (n < 1) throw ContractError("n must be at least 1");
  if (tau < 1 || tau > n) {
    throw ContractError("tau must lie in [1, " + std::to_string(n) +
                        "], got " + std::to_string(tau));
  }
}

double interpolate_constant(std::size_t n, std::size_t tau, double single,
                            double full) {
  if (n == 1) return single;
  const double nn = static_cast<double>(n);
  const double tt = static_cast<double>(tau);
  const double w_single = (nn - tt) / (tt * (nn - 1.0));
  const double w_full = nn * (tt - 1.0) / (tt * (nn - 1.0));
  return w_single * single + w_full * full;
}

}  // namespace

double l_gamma_tau(double gamma, std::size_t n, std::size_t tau, double l_max,
                   double l_gamma) {
  check_gamma(gamma);
  check_tau(n, tau);
  if (!(l_max > 0.0)) throw ContractError("L_max must be positive");
  if (!(l_gamma > 0.0)) throw ContractError("L_gamma must be positive");
  return interpolate_constant(n, tau, l_max / (1.0 + gamma * l_max), l_gamma);
}

double l_gamma_tau_nonsmooth(double gamma, std::size_t n, std::size_t tau,
                             double l_gamma) {
  check_gamma(gamma);
  check_tau(n, tau);
  if (!(l_gamma > 0.0)) throw ContractError("L_gamma must be positive");
  if (l_gamma > 1.0 / gamma + 1e-12 / gamma) {
    throw ContractError(
        "non-smooth path requires L_gamma <= 1/gamma; the averaged envelope "
        "of indicators cannot be steeper");
  }
  return interpolate_constant(n, tau, 1.0 / gamma, l_gamma);
}

double rate_constant(double gamma, double alpha, double l_max,
                     double l_gamma_tau_value) {
  check_gamma(gamma);
  if (!(l_max > 0.0)) throw ContractError("L_max must be positive");
  if (!(l_gamma_tau_value > 0.0)) {
    throw ContractError("L_gamma_tau must be positive");
  }
  const double product = alpha * gamma * l_gamma_tau_value;
  if (!(alpha > 0.0) || !(product < 2.0)) {
    throw ContractError(
        "alpha is outside the admissible range (0, " +
        std::to_string(2.0 / (gamma * l_gamma_tau_value)) + ")");
  }
  return (1.0 + gamma * l_max) / (alpha * gamma * (2.0 - product));
}

double optimal_alpha(double gamma, double l_gamma_tau_value) {
  check_gamma(gamma);
  if (!(l_gamma_tau_value > 0.0)) {
    throw ContractError("L_gamma_tau must be positive");
  }
  return 1.0 / (gamma * l_gamma_tau_value);
}

double fedprox_speedup(double gamma, double l_gamma_tau_value) {
  check_gamma(gamma);
  if (!(l_gamma_tau_value > 0.0)) {
    throw ContractError("L_gamma_tau must be positive");
  }
  const double p = gamma * l_gamma_tau_value;
  if (!(p < 2.0)) {
    throw ContractError("speedup is defined only when gamma L_gamma_tau < 2");
  }
  return 1.0 / (p * (2.0 - p));
}

GainBounds fedexp_worst_case_gain_bounds(double gamma,
                                         const std::vector<double>& client_l) {
  check_gamma(gamma);
  if (client_l.empty()) {
    throw ContractError("gain bounds need at least one smoothness constant");
  }
  double l_max = 0.0;
  double mean_env = 0.0;
  for (double l : client_l) {
    if (!(l > 0.0)) throw ContractError("smoothness constants must be positive");
    l_max = std::max(l_max, l);
    mean_env += l / (1.0 + gamma * l);
  }
  mean_env /= static_cast<double>(client_l.size());
  GainBounds out;
  out.lower = l_max / (1.0 + gamma * l_max) / mean_env;
  out.upper = static_cast<double>(client_l.size()) * out.lower;
  return out;
}

double strongly_convex_rate(double mu, double gamma, double alpha,
                            double l_max, double l_gamma_tau_value) {
  check_gamma(gamma);
  if (!(mu > 0.0)) throw ContractError("mu must be positive");
  const double product = alpha * gamma * l_gamma_tau_value;
  if (!(alpha > 0.0) || !(product < 2.0)) {
    throw ContractError(
        "alpha is outside the admissible range (0, " +
        std::to_string(2.0 / (gamma * l_gamma_tau_value)) + ")");
  }
  const double factor = 1.0 - alpha * gamma * (2.0 - product) * mu /
                                  (2.0 * (1.0 + gamma * l_max));
  if (!(factor > 0.0) || !(factor < 1.0)) {
    throw ContractError("contraction factor " + std::to_string(factor) +
                        " fell outside (0, 1); constants are inconsistent");
  }
  return factor;
}

NonsmoothRate nonsmooth_rate_constant(double gamma, std::size_t n,
                                      std::size_t tau, double l_gamma) {
  NonsmoothRate out;
  out.l_gamma_tau = l_gamma_tau_nonsmooth(gamma, n, tau, l_gamma);
  out.alpha_opt = optimal_alpha(gamma, out.l_gamma_tau);
  return out;
}

RateReport make_rate_report(double gamma, std::size_t n, std::size_t tau,
                            std::optional<double> l_max, double l_gamma,
                            const std::vector<double>& client_l) {
  check_tau(n, tau);
  RateReport r;
  r.gamma = gamma;
  r.n = n;
  r.tau = tau;
  r.l_gamma = l_gamma;
  r.smooth = l_max.has_value();
  r.l_max = l_max;
  if (r.smooth) {
    if (client_l.size() != n) {
      throw ContractError(
          "rate report: per-client constants must match the client count");
    }
    r.l_gamma_tau = l_gamma_tau(gamma, n, tau, *l_max, l_gamma);
    r.alpha_opt = optimal_alpha(gamma, r.l_gamma_tau);
    r.c_at_alpha_opt = rate_constant(gamma, r.alpha_opt, *l_max, r.l_gamma_tau);
    r.c_at_one = rate_constant(gamma, 1.0, *l_max, r.l_gamma_tau);
    r.speedup_vs_fedprox = fedprox_speedup(gamma, r.l_gamma_tau);
    r.l_max_over_c_opt = *l_max / *r.c_at_alpha_opt;
    r.gain_bounds = fedexp_worst_case_gain_bounds(gamma, client_l);
    const double upper = 2.0 / (gamma * r.l_gamma_tau);
    for (int j = 1; j <= 99; ++j) {
      const double a = upper * static_cast<double>(j) / 100.0;
      r.c_grid.emplace_back(a, rate_constant(gamma, a, *l_max, r.l_gamma_tau));
    }
  } else {
    if (!client_l.empty()) {
      throw ContractError(
          "rate report: per-client constants are a smooth-path input");
    }
    const NonsmoothRate ns = nonsmooth_rate_constant(gamma, n, tau, l_gamma);
    r.l_gamma_tau = ns.l_gamma_tau;
    r.alpha_opt = ns.alpha_opt;
  }
  return r;
}

nlohmann::json rate_report_to_json(const RateReport& r) {
  nlohmann::json j{{"gamma", r.gamma},
                   {"n", r.n},
                   {"tau", r.tau},
                   {"smooth", r.smooth},
                   {"l_gamma", r.l_gamma},
                   {"l_gamma_tau", r.l_gamma_tau},
                   {"alpha_opt", r.alpha_opt}};
  if (r.l_max) j["l_max"] = *r.l_max;
  if (r.c_at_alpha_opt) j["c_at_alpha_opt"] = *r.c_at_alpha_opt;
  if (r.c_at_one) j["c_at_one"] = *r.c_at_one;
  if (r.speedup_vs_fedprox) j["speedup_vs_fedprox"] = *r.speedup_vs_fedprox;
  if (r.l_max_over_c_opt) j["l_max_over_c_opt"] = *r.l_max_over_c_opt;
  if (r.gain_bounds) {
    j["gain_bounds"] = {{"lower", r.gain_bounds->lower},
                        {"upper", r.gain_bounds->upper}};
  }
  if (!r.c_grid.empty()) {
    nlohmann::json grid = nlohmann::json::array();
    for (const auto& [a, c] : r.c_grid) grid.push_back({{"alpha", a}, {"c", c}});
    j["c_grid"] = std::move(grid);
  }
  return j;
}

}  // namespace fedexprox
