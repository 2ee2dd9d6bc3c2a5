#include "fedexprox/problems.hpp"

#include <cmath>
#include <fstream>
#include <string>
#include <utility>

#include "fedexprox/errors.hpp"
#include "fedexprox/rng.hpp"
#include "spectral.hpp"

namespace fedexprox {
namespace {

Eigen::MatrixXd draw_matrix(PhiloxStream& g, Eigen::Index rows,
                            Eigen::Index cols) {
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = g.u01();
  }
  return M;
}

Eigen::VectorXd draw_vector(PhiloxStream& g, Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = g.u01();
  return v;
}

// Per-client constraint block: A_i x = b_i for the quadratic term,
// C_i x = e_i for the indicator.
std::pair<const Eigen::MatrixXd*, const Eigen::VectorXd*> constraint_block(
    const ClientObjective& c) {
  if (const auto* q = std::get_if<QuadraticObjective>(&c.term)) {
    return {&q->A(), &q->b()};
  }
  const auto& ind = std::get<AffineIndicatorObjective>(c.term);
  return {&ind.C(), &ind.e()};
}

}  // namespace

SolutionSet::SolutionSet(Eigen::MatrixXd A_stack, Eigen::VectorXd b_stack)
    : A_stack_(std::move(A_stack)), b_stack_(std::move(b_stack)) {
  if (A_stack_.rows() != b_stack_.size()) {
    throw ContractError("solution set: stacked dimensions disagree");
  }
  if (A_stack_.colPivHouseholderQr().rank() < A_stack_.rows()) {
    throw GenerationError(
        "solution set: stacked constraint matrix lost full row rank");
  }
  gram_llt_.compute(A_stack_ * A_stack_.transpose());
  if (gram_llt_.info() != Eigen::Success) {
    throw GenerationError("solution set: stacked Gram factorization failed");
  }
  min_norm_point_ = project(Eigen::VectorXd::Zero(A_stack_.cols()));
}

Eigen::VectorXd SolutionSet::project(const Eigen::VectorXd& x) const {
  if (x.size() != A_stack_.cols()) {
    throw ContractError("solution set: vector has dimension " +
                        std::to_string(x.size()) + ", expected " +
                        std::to_string(A_stack_.cols()));
  }
  return x - A_stack_.transpose() * gram_llt_.solve(A_stack_ * x - b_stack_);
}

double SolutionSet::distance_squared(const Eigen::VectorXd& x) const {
  return (x - project(x)).squaredNorm();
}

FederatedProblem::FederatedProblem(
    std::shared_ptr<std::vector<ClientObjective>> clients, Eigen::Index d)
    : clients_(std::move(clients)), d_(d) {
  if (!clients_ || clients_->empty()) {
    throw ContractError("problem requires at least one client");
  }
  if (d_ < 1) throw ContractError("problem requires d >= 1");
  Eigen::Index total_rows = 0;
  for (const auto& c : *clients_) {
    if (client_dim(c) != d_) {
      throw ContractError("client " + std::to_string(c.id) +
                          " has dimension " + std::to_string(client_dim(c)) +
                          ", problem expects " + std::to_string(d_));
    }
    total_rows += constraint_block(c).first->rows();
  }

  Eigen::MatrixXd A_stack(total_rows, d_);
  Eigen::VectorXd b_stack(total_rows);
  Eigen::Index at = 0;
  for (const auto& c : *clients_) {
    const auto [A, b] = constraint_block(c);
    A_stack.middleRows(at, A->rows()) = *A;
    b_stack.segment(at, b->size()) = *b;
    at += A->rows();
  }
  solution_set_ = std::make_shared<SolutionSet>(std::move(A_stack),
                                                std::move(b_stack));

  const double residual = (solution_set_->A_stack() *
                               solution_set_->min_norm_point() -
                           solution_set_->b_stack())
                              .norm();
  interpolated_ =
      residual <= 1e-8 * (1.0 + solution_set_->b_stack().norm());

  client_smoothness_.reserve(clients_->size());
  bool all_smooth = true;
  double l_max = 0.0;
  double inf_sum = 0.0;
  for (const auto& c : *clients_) {
    client_smoothness_.push_back(smoothness_constant(c));
    if (client_smoothness_.back()) {
      l_max = std::max(l_max, *client_smoothness_.back());
    } else {
      all_smooth = false;
    }
    inf_sum += client_infimum(c);
  }
  if (all_smooth) l_max_ = l_max;
  f_star_ = inf_sum / static_cast<double>(clients_->size());
}

const ClientObjective& FederatedProblem::client(std::size_t i) const {
  if (i >= n()) {
    throw ContractError("client index " + std::to_string(i) +
                        " out of range for " + std::to_string(n()) +
                        " clients");
  }
  return (*clients_)[i];
}

double FederatedProblem::objective(const Eigen::VectorXd& x) const {
  double sum = 0.0;
  for (const auto& c : *clients_) sum += objective_value(c, x);
  return sum / static_cast<double>(n());
}

FederatedProblem gen_regression(std::size_t clients,
                                std::size_t rows_per_client, Eigen::Index d,
                                std::uint64_t seed) {
  if (clients < 1 || rows_per_client < 1) {
    throw ContractError("regression generator needs clients >= 1 and rows >= 1");
  }
  if (static_cast<std::size_t>(d) < clients * rows_per_client) {
    throw ContractError(
        "regression generator needs d >= clients * rows_per_client for an "
        "interpolated instance");
  }
  auto list = std::make_shared<std::vector<ClientObjective>>();
  for (std::size_t i = 0; i < clients; ++i) {
    PhiloxStream g(seed, i);
    Eigen::MatrixXd A = draw_matrix(g, Eigen::Index(rows_per_client), d);
    Eigen::VectorXd b = draw_vector(g, Eigen::Index(rows_per_client));
    list->push_back({int(i), QuadraticObjective(std::move(A), std::move(b))});
  }
  FederatedProblem problem(list, d);
  if (!problem.interpolated()) {
    throw GenerationError(
        "regression generator: interpolation residual check failed");
  }
  return problem;
}

FederatedProblem gen_example1(std::size_t n, double theta) {
  if (n < 1) throw ContractError("separable instance needs n >= 1");
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw ContractError("separable instance needs theta > 0");
  }
  auto list = std::make_shared<std::vector<ClientObjective>>();
  const auto d = Eigen::Index(n);
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, d);
    A(0, Eigen::Index(i)) = std::sqrt(theta);
    list->push_back({int(i), QuadraticObjective(std::move(A),
                                                Eigen::VectorXd::Zero(1))});
  }
  return FederatedProblem(list, d);
}

FederatedProblem gen_feasibility(std::size_t clients, std::size_t rows_per_set,
                                 Eigen::Index d, std::uint64_t seed) {
  if (clients < 1 || rows_per_set < 1) {
    throw ContractError("feasibility generator needs clients >= 1 and rows >= 1");
  }
  if (clients * rows_per_set > static_cast<std::size_t>(d)) {
    throw ContractError(
        "feasibility generator needs clients * rows_per_set <= d");
  }
  PhiloxStream common(seed, 0);
  const Eigen::VectorXd x_common = draw_vector(common, d);
  auto list = std::make_shared<std::vector<ClientObjective>>();
  for (std::size_t i = 0; i < clients; ++i) {
    PhiloxStream g(seed, i + 1);
    Eigen::MatrixXd C = draw_matrix(g, Eigen::Index(rows_per_set), d);
    int attempts = 0;
    while (C.colPivHouseholderQr().rank() < C.rows()) {
      if (++attempts > 50) {
        throw GenerationError("feasibility generator: client " +
                              std::to_string(i) +
                              " stayed rank-deficient after 50 repairs");
      }
      C += 1e-6 * draw_matrix(g, Eigen::Index(rows_per_set), d);
    }
    Eigen::VectorXd e = C * x_common;
    list->push_back(
        {int(i), AffineIndicatorObjective(std::move(C), std::move(e))});
  }
  FederatedProblem problem(list, d);
  if (!problem.interpolated()) {
    throw GenerationError(
        "feasibility generator: intersection residual check failed");
  }
  return problem;
}

double strong_convexity_constant(const FederatedProblem& problem) {
  if (!problem.all_smooth()) {
    throw ContractError(
        "strong convexity estimation requires an all-smooth client list");
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(problem.d(), problem.d());
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const auto& q = std::get<QuadraticObjective>(problem.client(i).term);
    S += q.A().transpose() * q.A();
  }
  S /= static_cast<double>(problem.n());
  return detail::lambda_min_spd(S);
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& M) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) data.push_back(M(r, c));
  }
  return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 1 || cols < 1 ||
      data.size() != static_cast<std::size_t>(rows * cols)) {
    throw ContractError("problem json: matrix shape disagrees with data size");
  }
  Eigen::MatrixXd M(rows, cols);
  std::size_t at = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = data[at++].get<double>();
  }
  return M;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(j.size());
  Eigen::Index at = 0;
  for (const auto& x : j) v(at++) = x.get<double>();
  return v;
}

void reject_unknown_keys(const nlohmann::json& j,
                         std::initializer_list<const char*> allowed,
                         const char* where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw ContractError(std::string("problem json: unknown key \"") + key +
                          "\" in " + where);
    }
  }
}

}  // namespace

nlohmann::json problem_to_json(const FederatedProblem& problem) {
  nlohmann::json clients = nlohmann::json::array();
  for (std::size_t i = 0; i < problem.n(); ++i) {
    const ClientObjective& c = problem.client(i);
    nlohmann::json entry{{"id", c.id}};
    if (const auto* q = std::get_if<QuadraticObjective>(&c.term)) {
      entry["kind"] = "quadratic";
      entry["A"] = matrix_to_json(q->A());
      entry["b"] = std::vector<double>(q->b().begin(), q->b().end());
    } else {
      const auto& ind = std::get<AffineIndicatorObjective>(c.term);
      entry["kind"] = "affine_indicator";
      entry["C"] = matrix_to_json(ind.C());
      entry["e"] = std::vector<double>(ind.e().begin(), ind.e().end());
    }
    clients.push_back(std::move(entry));
  }
  return {{"schema", "fedexprox-problem/v1"},
          {"d", problem.d()},
          {"clients", std::move(clients)}};
}

FederatedProblem problem_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ContractError("problem json: expected an object");
  reject_unknown_keys(j, {"schema", "d", "clients"}, "top level");
  if (j.at("schema").get<std::string>() != "fedexprox-problem/v1") {
    throw ContractError("problem json: schema must be fedexprox-problem/v1");
  }
  const auto d = j.at("d").get<Eigen::Index>();
  auto list = std::make_shared<std::vector<ClientObjective>>();
  for (const auto& entry : j.at("clients")) {
    reject_unknown_keys(entry, {"id", "kind", "A", "b", "C", "e"}, "client");
    const auto kind = entry.at("kind").get<std::string>();
    const int id = entry.at("id").get<int>();
    if (kind == "quadratic") {
      list->push_back({id, QuadraticObjective(matrix_from_json(entry.at("A")),
                                              vector_from_json(entry.at("b")))});
    } else if (kind == "affine_indicator") {
      list->push_back(
          {id, AffineIndicatorObjective(matrix_from_json(entry.at("C")),
                                        vector_from_json(entry.at("e")))});
    } else {
      throw ContractError("problem json: unknown client kind \"" + kind + "\"");
    }
  }
  return FederatedProblem(list, d);
}

void save_problem(const FederatedProblem& problem,
                  const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ContractError("cannot open " + path.string() + " for writing");
  }
  out << problem_to_json(problem).dump(2) << '\n';
}

FederatedProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& err) {
    throw ContractError("problem json: parse failure: " +
                        std::string(err.what()));
  }
  return problem_from_json(j);
}

}  // namespace fedexprox
