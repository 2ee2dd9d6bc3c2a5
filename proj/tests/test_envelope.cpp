#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "doctest.h"
#include "fedexprox/envelope.hpp"
#include "fedexprox/errors.hpp"
#include "fedexprox/objectives.hpp"
#include "fedexprox/rng.hpp"
#include "test_util.hpp"

using namespace fedexprox;
using testutil::random_matrix;
using testutil::random_vector;

namespace {

std::shared_ptr<std::vector<ClientObjective>> random_quadratic_clients(
    PhiloxStream& g, int n, int rows, int d) {
  auto clients = std::make_shared<std::vector<ClientObjective>>();
  for (int i = 0; i < n; ++i) {
    clients->push_back(
        {i, QuadraticObjective(random_matrix(g, rows, d), random_vector(g, rows))});
  }
  return clients;
}

}  // namespace

TEST_CASE("envelope value is sandwiched between infimum and objective") {
  PhiloxStream g(201, 0);
  auto clients = random_quadratic_clients(g, 4, 3, 8);
  EnvelopeContext ctx(0.5, clients);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = random_vector(g, 8);
    for (std::size_t i = 0; i < ctx.n(); ++i) {
      const double m = moreau_value(ctx, i, x);
      CHECK(m <= objective_value(ctx.client(i), x) + 1e-12);
      CHECK(m >= ctx.client_envelope_infimum(i) - 1e-12);
    }
  }
}

TEST_CASE("envelope gradient matches central finite differences") {
  PhiloxStream g(202, 0);
  auto clients = random_quadratic_clients(g, 3, 4, 6);
  for (double gamma : {0.1, 1.0, 10.0}) {
    EnvelopeContext ctx(gamma, clients);
    const Eigen::VectorXd x = random_vector(g, 6);
    for (std::size_t i = 0; i < ctx.n(); ++i) {
      const Eigen::VectorXd grad = moreau_grad(ctx, i, x);
      const double h = 1e-6;
      Eigen::VectorXd fd(6);
      for (int j = 0; j < 6; ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        fd(j) = (moreau_value(ctx, i, xp) - moreau_value(ctx, i, xm)) / (2 * h);
      }
      CHECK((grad - fd).norm() <= 1e-6 * (1.0 + grad.norm()));
    }
  }
}

TEST_CASE("envelope hessian product matches finite differences of the gradient") {
  PhiloxStream g(203, 0);
  const int d = 7;
  auto clients = std::make_shared<std::vector<ClientObjective>>();
  clients->push_back(
      {0, QuadraticObjective(random_matrix(g, 4, d), random_vector(g, 4))});
  clients->push_back(
      {1, AffineIndicatorObjective(random_matrix(g, 3, d), random_vector(g, 3))});
  EnvelopeContext ctx(0.8, clients);
  const Eigen::VectorXd x = random_vector(g, d);
  for (std::size_t i = 0; i < ctx.n(); ++i) {
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::VectorXd v = random_vector(g, d);
      const double h = 1e-6;
      const Eigen::VectorXd fd =
          (moreau_grad(ctx, i, x + h * v) - moreau_grad(ctx, i, x - h * v)) /
          (2 * h);
      const Eigen::VectorXd hv = moreau_hessian_apply(ctx, i, v);
      CHECK((hv - fd).norm() <= 1e-6 * (1.0 + hv.norm()));
    }
  }
}

TEST_CASE("envelope gradients are Lipschitz with the per-client constant") {
  PhiloxStream g(204, 0);
  auto clients = random_quadratic_clients(g, 3, 5, 9);
  EnvelopeContext ctx(0.3, clients);
  const EnvelopeSmoothness s = envelope_smoothness(ctx);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd u = random_vector(g, 9);
    const Eigen::VectorXd v = random_vector(g, 9);
    for (std::size_t i = 0; i < ctx.n(); ++i) {
      const double lhs = (moreau_grad(ctx, i, u) - moreau_grad(ctx, i, v)).norm();
      CHECK(lhs <= s.per_client[i] * (u - v).norm() * (1.0 + 1e-10) + 1e-12);
    }
  }
}

TEST_CASE("averaged-envelope constant matches a dense eigensolver") {
  PhiloxStream g(205, 0);
  const int n = 4, rows = 3, d = 10;
  auto clients = random_quadratic_clients(g, n, rows, d);
  for (double gamma : {0.1, 1.0}) {
    EnvelopeContext ctx(gamma, clients);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(d, d);
    for (const auto& c : *clients) {
      const auto& q = std::get<QuadraticObjective>(c.term);
      Eigen::MatrixXd F = q.A().transpose() * q.A();
      F.diagonal().array() += 1.0 / gamma;
      const Eigen::MatrixXd Finv = F.llt().solve(Eigen::MatrixXd::Identity(d, d));
      H += (Eigen::MatrixXd::Identity(d, d) - Finv / gamma) / gamma;
    }
    H /= n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const double oracle = es.eigenvalues().maxCoeff();
    const double est = envelope_smoothness(ctx).l_gamma;
    CHECK(est == doctest::Approx(oracle).epsilon(1e-8).scale(1.0 + oracle));
  }
}

TEST_CASE("averaged-envelope constant obeys the averaging sandwich") {
  PhiloxStream g(206, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 2 + int(g.below(4));
    const int rows = 2 + int(g.below(3));
    const int d = 8 + int(g.below(8));
    auto clients = random_quadratic_clients(g, n, rows, d);
    const double gamma = 0.05 + 2.0 * g.u01();
    EnvelopeContext ctx(gamma, clients);
    const EnvelopeSmoothness s = envelope_smoothness(ctx);
    double mean = 0.0;
    for (double c : s.per_client) mean += c;
    mean /= n;
    CHECK(s.l_gamma <= mean + 1e-8);
    CHECK(s.l_gamma >= mean / n - 1e-8);
  }
}

TEST_CASE("separable scalar clients reproduce closed-form constants") {
  // Client i holds 0.5*theta*x_i^2 in dimension n: the averaged envelope is
  // 0.5 * theta / (n (1 + gamma theta)) * ||x||^2.
  const int n = 4;
  const double theta = 1.3;
  const double gamma = 0.7;
  auto clients = std::make_shared<std::vector<ClientObjective>>();
  for (int i = 0; i < n; ++i) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, n);
    A(0, i) = std::sqrt(theta);
    clients->push_back({i, QuadraticObjective(A, Eigen::VectorXd::Zero(1))});
  }
  EnvelopeContext ctx(gamma, clients);
  PhiloxStream g(207, 0);
  const Eigen::VectorXd x = random_vector(g, n);
  for (int i = 0; i < n; ++i) {
    const double expected = 0.5 * theta / (1.0 + gamma * theta) * x(i) * x(i);
    CHECK(moreau_value(ctx, i, x) == doctest::Approx(expected).epsilon(1e-12));
  }
  const double avg = average_envelope_value(ctx, x);
  CHECK(avg == doctest::Approx(0.5 * theta / (n * (1.0 + gamma * theta)) *
                               x.squaredNorm())
                   .epsilon(1e-12));
  const EnvelopeSmoothness s = envelope_smoothness(ctx);
  CHECK(s.l_gamma ==
        doctest::Approx(theta / (n * (1.0 + gamma * theta))).epsilon(1e-8));
}

TEST_CASE("suboptimality transfers from objective to envelope") {
  // Interpolated instance: all clients vanish at a common point, so
  // averaged-envelope suboptimality is at least objective suboptimality
  // divided by (1 + gamma L_max).
  PhiloxStream g(208, 0);
  const int n = 3, rows = 2, d = 9;
  const Eigen::VectorXd xstar = random_vector(g, d);
  auto clients = std::make_shared<std::vector<ClientObjective>>();
  double l_max = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd A = random_matrix(g, rows, d);
    clients->push_back({i, QuadraticObjective(A, A * xstar)});
    l_max = std::max(l_max, *smoothness_constant(clients->back()));
  }
  for (double gamma : {0.1, 1.0, 10.0}) {
    EnvelopeContext ctx(gamma, clients);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd x = random_vector(g, d);
      double f = 0.0;
      for (const auto& c : *clients) f += objective_value(c, x);
      f /= n;
      const double env_subopt =
          average_envelope_value(ctx, x) - ctx.average_envelope_infimum();
      CHECK(env_subopt >= f / (1.0 + gamma * l_max) - 1e-10);
    }
  }
}

TEST_CASE("indicator clients report the non-smooth envelope constant") {
  PhiloxStream g(209, 0);
  const int d = 8;
  auto clients = std::make_shared<std::vector<ClientObjective>>();
  for (int i = 0; i < 2; ++i) {
    clients->push_back({i, AffineIndicatorObjective(random_matrix(g, 2, d),
                                                    random_vector(g, 2))});
  }
  const double gamma = 0.4;
  EnvelopeContext ctx(gamma, clients);
  const EnvelopeSmoothness s = envelope_smoothness(ctx);
  for (double c : s.per_client) CHECK(c == 1.0 / gamma);
  // gamma * L_gamma = lambda_max of an average of orthogonal projectors
  CHECK(gamma * s.l_gamma <= 1.0 + 1e-10);
  CHECK(s.l_gamma > 0.0);

  clients->push_back(
      {2, QuadraticObjective(random_matrix(g, 2, d), random_vector(g, 2))});
  EnvelopeContext mixed(gamma, clients);
  CHECK_THROWS_AS((void)envelope_smoothness(mixed), ContractError);
}

TEST_CASE("context rejects invalid configuration") {
  PhiloxStream g(210, 0);
  auto clients = random_quadratic_clients(g, 2, 2, 5);
  CHECK_THROWS_AS(EnvelopeContext(0.0, clients), ContractError);
  CHECK_THROWS_AS(
      EnvelopeContext(1.0, std::make_shared<std::vector<ClientObjective>>()),
      ContractError);
  auto mismatched = random_quadratic_clients(g, 1, 2, 5);
  mismatched->push_back(
      {1, QuadraticObjective(random_matrix(g, 2, 6), random_vector(g, 2))});
  CHECK_THROWS_AS(EnvelopeContext(1.0, mismatched), ContractError);
}
