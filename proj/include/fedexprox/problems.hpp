#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fedexprox/objectives.hpp"
#include "json.hpp"

namespace fedexprox {

// Affine set {x : A x = b} with A of full row rank, stacked from the
// per-client constraint blocks.  Under interpolation this set is exactly
// the common minimizer set, so distances to it are the trace diagnostic.
class SolutionSet {
 public:
  SolutionSet(Eigen::MatrixXd A_stack, Eigen::VectorXd b_stack);

  const Eigen::MatrixXd& A_stack() const { return A_stack_; }
  const Eigen::VectorXd& b_stack() const { return b_stack_; }
  const Eigen::VectorXd& min_norm_point() const { return min_norm_point_; }

  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
  double distance_squared(const Eigen::VectorXd& x) const;

 private:
  Eigen::MatrixXd A_stack_;
  Eigen::VectorXd b_stack_;
  Eigen::LLT<Eigen::MatrixXd> gram_llt_;  // A_stack A_stack^T
  Eigen::VectorXd min_norm_point_;
};

class FederatedProblem {
 public:
  FederatedProblem(std::shared_ptr<std::vector<ClientObjective>> clients,
                   Eigen::Index d);

  std::size_t n() const { return clients_->size(); }
  Eigen::Index d() const { return d_; }
  const std::shared_ptr<std::vector<ClientObjective>>& clients() const {
    return clients_;
  }
  const ClientObjective& client(std::size_t i) const;
  const SolutionSet& solution_set() const { return *solution_set_; }
  bool interpolated() const { return interpolated_; }

  // Smoothness caches; l_max is present only when every client is smooth.
  const std::vector<std::optional<double>>& client_smoothness() const {
    return client_smoothness_;
  }
  std::optional<double> l_max() const { return l_max_; }
  bool all_smooth() const { return l_max_.has_value(); }

  // (1/n) sum_i f_i at x, and inf f under interpolation.
  double objective(const Eigen::VectorXd& x) const;
  double f_star() const { return f_star_; }

 private:
  std::shared_ptr<std::vector<ClientObjective>> clients_;
  Eigen::Index d_;
  std::shared_ptr<SolutionSet> solution_set_;
  bool interpolated_ = false;
  std::vector<std::optional<double>> client_smoothness_;
  std::optional<double> l_max_;
  double f_star_ = 0.0;
};

// Interpolated least-squares instance: entries of every A_i and b_i are
// i.i.d. U[0,1) from the counter-based stream (seed, client index), filled
// row-major, A before b.  Requires d >= clients * rows_per_client so the
// stacked system is consistent.
FederatedProblem gen_regression(std::size_t clients,
                                std::size_t rows_per_client, Eigen::Index d,
                                std::uint64_t seed);

// Separable scalar instance in dimension n: client i holds
// 0.5 * theta * x_i^2, with minimizer set {0}.
FederatedProblem gen_example1(std::size_t n, double theta);

// Affine feasibility instance: a common point is drawn first (stream 0),
// then each C_i from stream i+1 with e_i = C_i x.  A rank-deficient draw is
// repaired by adding 1e-6-scaled fresh entries from the same stream, up to
// 50 attempts.  Requires clients * rows_per_set <= d.
FederatedProblem gen_feasibility(std::size_t clients, std::size_t rows_per_set,
                                 Eigen::Index d, std::uint64_t seed);

// Smallest eigenvalue of (1/n) sum_i A_i^T A_i by inverse power iteration.
// Requires an all-smooth client list.
double strong_convexity_constant(const FederatedProblem& problem);

// Serialization ("fedexprox-problem/v1").  Matrices are stored row-major
// with full-precision base-10 floats; derived caches are rebuilt on load.
nlohmann::json problem_to_json(const FederatedProblem& problem);
FederatedProblem problem_from_json(const nlohmann::json& j);
void save_problem(const FederatedProblem& problem,
                  const std::filesystem::path& path);
FederatedProblem load_problem(const std::filesystem::path& path);

}  // namespace fedexprox
