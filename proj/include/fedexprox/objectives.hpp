#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>

namespace fedexprox {

// Least-squares term f(x) = 0.5 * ||A x - b||^2 with A of shape m x d.
//
// The proximal map solves (A^T A + I/gamma) p = A^T b + x/gamma via a
// Cholesky factorization.  Factorizations are keyed by gamma and populated
// through prepare() at configuration time; afterwards the object is only
// read, so concurrent evaluation is safe.  A prox call for an unprepared
// gamma builds a one-shot factorization through the same routine, which
// keeps cached and fresh results bit-identical.
class QuadraticObjective {
 public:
  QuadraticObjective(Eigen::MatrixXd A, Eigen::VectorXd b);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::VectorXd& b() const { return b_; }
  Eigen::Index dim() const { return A_.cols(); }

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd prox(double gamma, const Eigen::VectorXd& x) const;
  void prepare(double gamma);

  // lambda_max(A^T A), estimated once at construction by power iteration
  // (relative Rayleigh-quotient tolerance 1e-10, cap 10000 iterations,
  // normalized all-ones start).
  double smoothness() const { return smoothness_; }

  // Minimum-norm least-squares solution of A x = b and the value there.
  Eigen::VectorXd least_squares_minimizer() const;
  double infimum() const { return infimum_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> factorization(double gamma) const;
  Eigen::VectorXd prox_with(const Eigen::LLT<Eigen::MatrixXd>& llt,
                            double gamma, const Eigen::VectorXd& x) const;

  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
  Eigen::MatrixXd gram_;  // A^T A
  double smoothness_ = 0.0;
  double infimum_ = 0.0;
  Eigen::VectorXd min_norm_solution_;
  std::map<std::uint64_t, Eigen::LLT<Eigen::MatrixXd>> cache_;
};

// Indicator of the affine set {x : C x = e} with C of shape p x d,
// full row rank.  The proximal map is the orthogonal projection
// x - C^T (C C^T)^{-1} (C x - e) for every gamma.
class AffineIndicatorObjective {
 public:
  AffineIndicatorObjective(Eigen::MatrixXd C, Eigen::VectorXd e);

  const Eigen::MatrixXd& C() const { return C_; }
  const Eigen::VectorXd& e() const { return e_; }
  Eigen::Index dim() const { return C_.cols(); }

  // 0 when ||C x - e||_inf <= 1e-9, +infinity otherwise.
  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd prox(double gamma, const Eigen::VectorXd& x) const;

 private:
  Eigen::MatrixXd C_;
  Eigen::VectorXd e_;
  Eigen::LLT<Eigen::MatrixXd> gram_llt_;  // C C^T
};

// One client's term: id plus either variant.
struct ClientObjective {
  int id = 0;
  std::variant<QuadraticObjective, AffineIndicatorObjective> term;
};

Eigen::Index client_dim(const ClientObjective& c);
bool client_is_smooth(const ClientObjective& c);
double objective_value(const ClientObjective& c, const Eigen::VectorXd& x);
Eigen::VectorXd prox(const ClientObjective& c, double gamma,
                     const Eigen::VectorXd& x);
void prepare_prox(ClientObjective& c, double gamma);
// Smoothness constant of the term; empty for the indicator variant.
std::optional<double> smoothness_constant(const ClientObjective& c);
// inf_x f_i(x): least-squares value for the quadratic, 0 for the indicator.
double client_infimum(const ClientObjective& c);

}  // namespace fedexprox
