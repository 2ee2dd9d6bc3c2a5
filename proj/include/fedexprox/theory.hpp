#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"

namespace fedexprox {

// All functions here are pure arithmetic on constants estimated elsewhere;
// nothing in this module re-estimates spectra.

// Effective smoothness of a tau-nice prox-averaged step on smooth clients:
// interpolates between L_max / (1 + gamma L_max) at tau = 1 and L_gamma at
// tau = n.  n = 1 returns the single-client constant directly.
double l_gamma_tau(double gamma, std::size_t n, std::size_t tau, double l_max,
                   double l_gamma);

// Same interpolation with 1/gamma in place of the smooth per-client
// constant; requires L_gamma <= 1/gamma.
double l_gamma_tau_nonsmooth(double gamma, std::size_t n, std::size_t tau,
                             double l_gamma);

// Iteration-complexity constant C(gamma, tau, alpha) =
// (1 + gamma L_max) / (alpha gamma (2 - alpha gamma L_{gamma,tau})).
// alpha must satisfy 0 < alpha gamma L_{gamma,tau} < 2.
double rate_constant(double gamma, double alpha, double l_max,
                     double l_gamma_tau_value);

// Minimizer of C in alpha: 1 / (gamma L_{gamma,tau}).
double optimal_alpha(double gamma, double l_gamma_tau_value);

// C at alpha = 1 over C at the optimal alpha:
// 1 / (gamma L_{gamma,tau} (2 - gamma L_{gamma,tau})).
double fedprox_speedup(double gamma, double l_gamma_tau_value);

// Bounds on L_max / C(gamma, n, alpha_opt), the full-participation gain of
// extrapolation over the tau = 1 baseline, from the averaging sandwich.
struct GainBounds {
  double lower = 0.0;
  double upper = 0.0;
};
GainBounds fedexp_worst_case_gain_bounds(double gamma,
                                         const std::vector<double>& client_l);

// Per-round contraction factor under mu-strong convexity:
// 1 - alpha gamma (2 - alpha gamma L_{gamma,tau}) mu / (2 (1 + gamma L_max)).
// The result must land in (0, 1).
double strongly_convex_rate(double mu, double gamma, double alpha,
                            double l_max, double l_gamma_tau_value);

// Non-smooth effective constant and the optimal extrapolation alpha_opt =
// 1 / (gamma L_{gamma,tau}) >= 1.
struct NonsmoothRate {
  double l_gamma_tau = 0.0;
  double alpha_opt = 0.0;
};
NonsmoothRate nonsmooth_rate_constant(double gamma, std::size_t n,
                                      std::size_t tau, double l_gamma);

// Assembled diagnostics for one (problem, gamma, tau) pair.
struct RateReport {
  double gamma = 0.0;
  std::size_t n = 0;
  std::size_t tau = 0;
  bool smooth = true;
  std::optional<double> l_max;
  double l_gamma = 0.0;
  double l_gamma_tau = 0.0;
  double alpha_opt = 0.0;
  std::optional<double> c_at_alpha_opt;
  std::optional<double> c_at_one;
  std::optional<double> speedup_vs_fedprox;
  std::optional<double> l_max_over_c_opt;
  std::optional<GainBounds> gain_bounds;
  // C(alpha) sampled on an evenly spaced grid inside the admissible range.
  std::vector<std::pair<double, double>> c_grid;
};

// client_l carries per-client smoothness constants on the smooth path and
// must be empty on the non-smooth path (l_max empty as well).
RateReport make_rate_report(double gamma, std::size_t n, std::size_t tau,
                            std::optional<double> l_max, double l_gamma,
                            const std::vector<double>& client_l);

nlohmann::json rate_report_to_json(const RateReport& report);

}  // namespace fedexprox
