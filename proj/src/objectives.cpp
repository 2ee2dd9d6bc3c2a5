#include "fedexprox/objectives.hpp"

#include <bit>
#include <cmath>
#include <limits>

#include "fedexprox/errors.hpp"
#include "spectral.hpp"

namespace fedexprox {
namespace {

void check_finite(const Eigen::MatrixXd& M, const char* what) {
  if (!M.allFinite()) {
    throw ContractError(std::string(what) + " contains non-finite entries");
  }
}

void check_dim(Eigen::Index got, Eigen::Index want, const char* op) {
  if (got != want) {
    throw ContractError(std::string(op) + ": vector has dimension " +
                        std::to_string(got) + ", objective expects " +
                        std::to_string(want));
  }
}

}  // namespace

QuadraticObjective::QuadraticObjective(Eigen::MatrixXd A, Eigen::VectorXd b)
    : A_(std::move(A)), b_(std::move(b)) {
  if (A_.rows() < 1 || A_.cols() < 1) {
    throw ContractError("quadratic term needs at least a 1x1 matrix");
  }
  if (b_.size() != A_.rows()) {
    throw ContractError("quadratic term: b has dimension " +
                        std::to_string(b_.size()) + ", A has " +
                        std::to_string(A_.rows()) + " rows");
  }
  check_finite(A_, "A");
  check_finite(b_, "b");
  gram_ = A_.transpose() * A_;
  smoothness_ = detail::lambda_max(
      [this](const Eigen::VectorXd& v) { return Eigen::VectorXd(gram_ * v); },
      gram_.rows());
  min_norm_solution_ = A_.completeOrthogonalDecomposition().solve(b_);
  infimum_ = value(min_norm_solution_);
}

double QuadraticObjective::value(const Eigen::VectorXd& x) const {
  check_dim(x.size(), dim(), "value");
  return 0.5 * (A_ * x - b_).squaredNorm();
}

Eigen::LLT<Eigen::MatrixXd> QuadraticObjective::factorization(
    double gamma) const {
  Eigen::MatrixXd shifted = gram_;
  shifted.diagonal().array() += 1.0 / gamma;
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw OracleError("prox factorization failed at gamma=" +
                      std::to_string(gamma));
  }
  return llt;
}

Eigen::VectorXd QuadraticObjective::prox_with(
    const Eigen::LLT<Eigen::MatrixXd>& llt, double gamma,
    const Eigen::VectorXd& x) const {
  return llt.solve(A_.transpose() * b_ + x / gamma);
}

Eigen::VectorXd QuadraticObjective::prox(double gamma,
                                         const Eigen::VectorXd& x) const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ContractError("prox requires gamma > 0");
  }
  check_dim(x.size(), dim(), "prox");
  const auto it = cache_.find(std::bit_cast<std::uint64_t>(gamma));
  if (it != cache_.end()) return prox_with(it->second, gamma, x);
  return prox_with(factorization(gamma), gamma, x);
}

void QuadraticObjective::prepare(double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ContractError("prepare requires gamma > 0");
  }
  cache_.emplace(std::bit_cast<std::uint64_t>(gamma), factorization(gamma));
}

Eigen::VectorXd QuadraticObjective::least_squares_minimizer() const {
  return min_norm_solution_;
}

AffineIndicatorObjective::AffineIndicatorObjective(Eigen::MatrixXd C,
                                                   Eigen::VectorXd e)
    : C_(std::move(C)), e_(std::move(e)) {
  if (C_.rows() < 1 || C_.cols() < 1) {
    throw ContractError("affine indicator needs at least a 1x1 matrix");
  }
  if (e_.size() != C_.rows()) {
    throw ContractError("affine indicator: e has dimension " +
                        std::to_string(e_.size()) + ", C has " +
                        std::to_string(C_.rows()) + " rows");
  }
  check_finite(C_, "C");
  check_finite(e_, "e");
  if (C_.colPivHouseholderQr().rank() < C_.rows()) {
    throw ContractError("affine indicator: C must have full row rank");
  }
  gram_llt_.compute(C_ * C_.transpose());
  if (gram_llt_.info() != Eigen::Success) {
    throw OracleError("affine indicator: factorization of C C^T failed");
  }
}

double AffineIndicatorObjective::value(const Eigen::VectorXd& x) const {
  check_dim(x.size(), dim(), "value");
  const double residual = (C_ * x - e_).lpNorm<Eigen::Infinity>();
  return residual <= 1e-9 ? 0.0 : std::numeric_limits<double>::infinity();
}

Eigen::VectorXd AffineIndicatorObjective::prox(double gamma,
                                               const Eigen::VectorXd& x) const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw ContractError("prox requires gamma > 0");
  }
  check_dim(x.size(), dim(), "prox");
  return x - C_.transpose() * gram_llt_.solve(C_ * x - e_);
}

Eigen::Index client_dim(const ClientObjective& c) {
  return std::visit([](const auto& t) { return t.dim(); }, c.term);
}

bool client_is_smooth(const ClientObjective& c) {
  return std::holds_alternative<QuadraticObjective>(c.term);
}

double objective_value(const ClientObjective& c, const Eigen::VectorXd& x) {
  return std::visit([&](const auto& t) { return t.value(x); }, c.term);
}

Eigen::VectorXd prox(const ClientObjective& c, double gamma,
                     const Eigen::VectorXd& x) {
  try {
    return std::visit([&](const auto& t) { return t.prox(gamma, x); }, c.term);
  } catch (const ContractError& err) {
    throw ContractError("client " + std::to_string(c.id) + ": " + err.what());
  } catch (const OracleError& err) {
    throw OracleError("client " + std::to_string(c.id) + ": " + err.what());
  }
}

void prepare_prox(ClientObjective& c, double gamma) {
  if (auto* q = std::get_if<QuadraticObjective>(&c.term)) q->prepare(gamma);
}

std::optional<double> smoothness_constant(const ClientObjective& c) {
  if (const auto* q = std::get_if<QuadraticObjective>(&c.term)) {
    return q->smoothness();
  }
  return std::nullopt;
}

double client_infimum(const ClientObjective& c) {
  if (const auto* q = std::get_if<QuadraticObjective>(&c.term)) {
    return q->infimum();
  }
  return 0.0;
}

}  // namespace fedexprox
