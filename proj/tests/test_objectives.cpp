#include <Eigen/Dense>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "fedexprox/errors.hpp"
#include "fedexprox/objectives.hpp"
#include "fedexprox/rng.hpp"
#include "test_util.hpp"

using namespace fedexprox;
using testutil::random_matrix;
using testutil::random_vector;

TEST_CASE("identity quadratic has closed-form prox") {
  // f(x) = 0.5 ||x - (2,2)||^2 with gamma = 1 averages x with (2,2).
  QuadraticObjective q(Eigen::MatrixXd::Identity(2, 2),
                       Eigen::Vector2d(2.0, 2.0));
  const Eigen::Vector2d x(4.0, 0.0);
  const Eigen::VectorXd p = q.prox(1.0, x);
  CHECK(p(0) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(p(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(q.smoothness() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("prox satisfies its optimality condition") {
  PhiloxStream g(101, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 3 + int(g.below(5));
    const int d = m + int(g.below(10));
    QuadraticObjective q(random_matrix(g, m, d), random_vector(g, m));
    for (double gamma : {0.01, 0.1, 1.0, 10.0}) {
      const Eigen::VectorXd x = random_vector(g, d);
      const Eigen::VectorXd p = q.prox(gamma, x);
      const Eigen::VectorXd grad =
          q.A().transpose() * (q.A() * p - q.b()) + (p - x) / gamma;
      CHECK(grad.norm() <= 1e-8 * (1.0 + x.norm()));
    }
  }
}

TEST_CASE("prox fixes minimizers of consistent systems") {
  PhiloxStream g(102, 0);
  const int m = 4, d = 12;
  const Eigen::MatrixXd A = random_matrix(g, m, d);
  const Eigen::VectorXd xstar = random_vector(g, d);
  QuadraticObjective q(A, A * xstar);
  const Eigen::VectorXd mn = q.least_squares_minimizer();
  CHECK((A * mn - q.b()).norm() <= 1e-10 * (1.0 + q.b().norm()));
  for (double gamma : {0.1, 1.0, 10.0}) {
    CHECK((q.prox(gamma, mn) - mn).norm() <= 1e-10);
  }
  CHECK(q.infimum() <= 1e-18);
}

TEST_CASE("prox is non-expansive") {
  PhiloxStream g(103, 0);
  const int m = 5, d = 9;
  QuadraticObjective q(random_matrix(g, m, d), random_vector(g, m));
  AffineIndicatorObjective ind(random_matrix(g, 3, d), random_vector(g, 3));
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXd u = random_vector(g, d);
    const Eigen::VectorXd v = random_vector(g, d);
    const double bound = (u - v).norm() * (1.0 + 1e-12) + 1e-15;
    CHECK((q.prox(1.0, u) - q.prox(1.0, v)).norm() <= bound);
    CHECK((ind.prox(1.0, u) - ind.prox(1.0, v)).norm() <= bound);
  }
}

TEST_CASE("cached factorization reproduces fresh prox bit-identically") {
  PhiloxStream g(104, 0);
  const int m = 6, d = 15;
  const Eigen::MatrixXd A = random_matrix(g, m, d);
  const Eigen::VectorXd b = random_vector(g, m);
  QuadraticObjective cached(A, b);
  const QuadraticObjective fresh(A, b);
  cached.prepare(0.37);
  const Eigen::VectorXd x = random_vector(g, d);
  const Eigen::VectorXd pc = cached.prox(0.37, x);
  const Eigen::VectorXd pf = fresh.prox(0.37, x);
  for (int i = 0; i < d; ++i) CHECK(pc(i) == pf(i));
}

TEST_CASE("power iteration matches dense eigensolver") {
  PhiloxStream g(105, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + int(g.below(8));
    const int d = 2 + int(g.below(20));
    const Eigen::MatrixXd A = random_matrix(g, m, d);
    QuadraticObjective q(A, random_vector(g, m));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A.transpose() * A);
    const double oracle = es.eigenvalues().maxCoeff();
    CHECK(q.smoothness() ==
          doctest::Approx(oracle).epsilon(1e-8).scale(1.0 + oracle));
  }
}

TEST_CASE("projection is idempotent and feasibility-aware") {
  PhiloxStream g(106, 0);
  const int p = 3, d = 10;
  const Eigen::MatrixXd C = random_matrix(g, p, d);
  const Eigen::VectorXd e = random_vector(g, p);
  AffineIndicatorObjective ind(C, e);
  const Eigen::VectorXd x = random_vector(g, d);
  const Eigen::VectorXd pi = ind.prox(1.0, x);
  CHECK((ind.prox(1.0, pi) - pi).norm() <= 1e-10);
  CHECK((C * pi - e).lpNorm<Eigen::Infinity>() <= 1e-9);
  CHECK(ind.value(pi) == 0.0);
  CHECK(ind.value(x) == std::numeric_limits<double>::infinity());
  // gamma does not move the projection
  CHECK((ind.prox(0.01, x) - pi).norm() == 0.0);
}

TEST_CASE("client wrapper dispatches and reports smoothness") {
  PhiloxStream g(107, 0);
  const int d = 7;
  ClientObjective cq{3, QuadraticObjective(random_matrix(g, 4, d),
                                           random_vector(g, 4))};
  ClientObjective ci{5, AffineIndicatorObjective(random_matrix(g, 2, d),
                                                 random_vector(g, 2))};
  CHECK(client_is_smooth(cq));
  CHECK_FALSE(client_is_smooth(ci));
  CHECK(smoothness_constant(cq).has_value());
  CHECK_FALSE(smoothness_constant(ci).has_value());
  CHECK(client_infimum(ci) == 0.0);
  CHECK(client_dim(cq) == d);

  const Eigen::VectorXd x = random_vector(g, d);
  CHECK(objective_value(cq, x) ==
        doctest::Approx(std::get<QuadraticObjective>(cq.term).value(x)));
  CHECK((prox(cq, 1.0, x) -
         std::get<QuadraticObjective>(cq.term).prox(1.0, x))
            .norm() == 0.0);
}

TEST_CASE("contract violations are rejected with context") {
  PhiloxStream g(108, 0);
  QuadraticObjective q(random_matrix(g, 3, 6), random_vector(g, 3));
  CHECK_THROWS_AS((void)q.prox(1.0, random_vector(g, 5)), ContractError);
  CHECK_THROWS_AS((void)q.prox(0.0, random_vector(g, 6)), ContractError);
  CHECK_THROWS_AS((void)q.value(random_vector(g, 7)), ContractError);
  CHECK_THROWS_AS(QuadraticObjective(random_matrix(g, 3, 6),
                                     random_vector(g, 4)),
                  ContractError);
  // rank-deficient C: duplicate a row
  Eigen::MatrixXd C = random_matrix(g, 3, 6);
  C.row(2) = C.row(0);
  CHECK_THROWS_AS(AffineIndicatorObjective(C, random_vector(g, 3)),
                  ContractError);
  // client id shows up in wrapped errors
  ClientObjective c{42, QuadraticObjective(random_matrix(g, 3, 6),
                                           random_vector(g, 3))};
  CHECK_THROWS_WITH_AS((void)prox(c, 1.0, random_vector(g, 5)),
                       doctest::Contains("client 42"), ContractError);
}
