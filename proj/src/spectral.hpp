#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "fedexprox/errors.hpp"

namespace fedexprox::detail {

// Largest eigenvalue of a symmetric PSD operator given through its matvec.
// Power iteration: relative Rayleigh-quotient tolerance 1e-10, cap 10000
// iterations, deterministic all-ones normalized start.
inline double lambda_max(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& apply,
    Eigen::Index d) {
  Eigen::VectorXd v =
      Eigen::VectorXd::Ones(d) / std::sqrt(static_cast<double>(d));
  Eigen::VectorXd w = apply(v);
  double rayleigh = v.dot(w);
  for (int it = 0; it < 10000; ++it) {
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
    w = apply(v);
    const double next = v.dot(w);
    if (std::abs(next - rayleigh) <= 1e-10 * std::max(1.0, std::abs(next))) {
      return next;
    }
    rayleigh = next;
  }
  throw OracleError("power iteration did not converge within 10000 steps");
}

// Smallest eigenvalue of a symmetric positive definite matrix via inverse
// power iteration on a Cholesky factorization; same tolerances as above.
inline double lambda_min_spd(const Eigen::MatrixXd& S) {
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw OracleError("inverse power iteration: matrix is not positive definite");
  }
  const Eigen::Index d = S.rows();
  Eigen::VectorXd v =
      Eigen::VectorXd::Ones(d) / std::sqrt(static_cast<double>(d));
  double rayleigh = v.dot(S * v);
  for (int it = 0; it < 10000; ++it) {
    Eigen::VectorXd w = llt.solve(v);
    v = w / w.norm();
    const double next = v.dot(S * v);
    if (std::abs(next - rayleigh) <= 1e-10 * std::max(1.0, std::abs(next))) {
      return next;
    }
    rayleigh = next;
  }
  throw OracleError("inverse power iteration did not converge within 10000 steps");
}

}  // namespace fedexprox::detail
