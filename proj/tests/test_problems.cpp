#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <variant>

#include "doctest.h"
#include "fedexprox/errors.hpp"
#include "fedexprox/problems.hpp"
#include "test_util.hpp"

using namespace fedexprox;

namespace {

const QuadraticObjective& quad(const FederatedProblem& p, std::size_t i) {
  return std::get<QuadraticObjective>(p.client(i).term);
}

bool same_bits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a.array() == b.array()).all();
}

bool same_bits(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() && (a.array() == b.array()).all();
}

}  // namespace

TEST_CASE("regression generator is bit-for-bit deterministic in the seed") {
  const auto p1 = gen_regression(3, 2, 12, 77);
  const auto p2 = gen_regression(3, 2, 12, 77);
  const auto p3 = gen_regression(3, 2, 12, 78);
  REQUIRE(p1.n() == 3);
  bool any_diff = false;
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(same_bits(quad(p1, i).A(), quad(p2, i).A()));
    CHECK(same_bits(quad(p1, i).b(), quad(p2, i).b()));
    any_diff = any_diff || !same_bits(quad(p1, i).A(), quad(p3, i).A());
  }
  CHECK(any_diff);
  // entries come from U[0,1)
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(quad(p1, i).A().minCoeff() >= 0.0);
    CHECK(quad(p1, i).A().maxCoeff() < 1.0);
  }
}

TEST_CASE("generated instances are interpolated with zero optimal value") {
  const auto p = gen_regression(4, 3, 24, 5);
  CHECK(p.interpolated());
  CHECK(p.all_smooth());
  CHECK(std::abs(p.f_star()) <= 1e-12);
  const Eigen::VectorXd star = p.solution_set().min_norm_point();
  CHECK(p.solution_set().distance_squared(star) <= 1e-18);
  CHECK(p.objective(star) <= 1e-12);
  // every client is individually minimized at the common point
  for (std::size_t i = 0; i < p.n(); ++i) {
    CHECK((quad(p, i).A() * star - quad(p, i).b()).norm() <= 1e-7);
  }
}

TEST_CASE("solution-set projector is an orthogonal projector onto A x = b") {
  const auto p = gen_regression(3, 2, 10, 11);
  const SolutionSet& s = p.solution_set();
  PhiloxStream g(12, 0);
  for (int t = 0; t < 5; ++t) {
    const Eigen::VectorXd x = testutil::random_vector(g, 10, 4.0);
    const Eigen::VectorXd px = s.project(x);
    CHECK((s.A_stack() * px - s.b_stack()).norm() <= 1e-9);
    CHECK((s.project(px) - px).norm() <= 1e-9);
    CHECK(s.distance_squared(x) == doctest::Approx((x - px).squaredNorm()));
    // projection is the nearest feasible point, and the residual x - px is
    // orthogonal to the set: Pythagoras holds against any feasible point
    const Eigen::VectorXd other =
        s.project(px + testutil::random_vector(g, 10, 0.5));
    CHECK((x - px).squaredNorm() <= (x - other).squaredNorm() + 1e-12);
    CHECK((x - other).squaredNorm() ==
          doctest::Approx((x - px).squaredNorm() + (px - other).squaredNorm())
              .epsilon(1e-9));
  }
  CHECK_THROWS_AS((void)s.project(Eigen::VectorXd::Zero(3)), ContractError);
}

TEST_CASE("generators reject impossible shapes") {
  CHECK_THROWS_AS((void)gen_regression(4, 3, 11, 1), ContractError);
  CHECK_THROWS_AS((void)gen_regression(0, 3, 12, 1), ContractError);
  CHECK_THROWS_AS((void)gen_feasibility(3, 4, 11, 1), ContractError);
  CHECK_THROWS_AS((void)gen_example1(3, 0.0), ContractError);
  CHECK_THROWS_AS((void)gen_example1(0, 1.0), ContractError);
}

TEST_CASE("separable instance has the advertised structure") {
  const double theta = 1.7;
  const auto p = gen_example1(5, theta);
  CHECK(p.d() == 5);
  CHECK(p.all_smooth());
  CHECK(*p.l_max() == doctest::Approx(theta).epsilon(1e-10));
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(*p.client_smoothness()[i] == doctest::Approx(theta).epsilon(1e-10));
  }
  // minimizer set is the origin
  CHECK(p.solution_set().min_norm_point().norm() <= 1e-12);
  PhiloxStream g(13, 0);
  const Eigen::VectorXd x = testutil::random_vector(g, 5, 2.0);
  CHECK(p.solution_set().project(x).norm() <= 1e-12);
  CHECK(p.objective(x) ==
        doctest::Approx(0.5 * theta * x.squaredNorm() / 5.0).epsilon(1e-12));
}

TEST_CASE("feasibility instance intersects at the common point") {
  const auto p = gen_feasibility(3, 3, 10, 21);
  CHECK(p.interpolated());
  CHECK_FALSE(p.all_smooth());
  CHECK(p.f_star() == 0.0);
  for (std::size_t i = 0; i < p.n(); ++i) {
    CHECK_FALSE(client_is_smooth(p.client(i)));
    CHECK(objective_value(p.client(i), p.solution_set().min_norm_point()) ==
          0.0);
  }
  // determinism across calls
  const auto q = gen_feasibility(3, 3, 10, 21);
  const auto& pi = std::get<AffineIndicatorObjective>(p.client(1).term);
  const auto& qi = std::get<AffineIndicatorObjective>(q.client(1).term);
  CHECK(same_bits(pi.C(), qi.C()));
  CHECK(same_bits(pi.e(), qi.e()));
}

TEST_CASE("strong convexity constant matches a dense eigensolver") {
  const auto p = gen_regression(2, 5, 10, 31);  // stacked rows = d, full rank
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(10, 10);
  for (std::size_t i = 0; i < p.n(); ++i) {
    S += quad(p, i).A().transpose() * quad(p, i).A();
  }
  S /= double(p.n());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const double mu = strong_convexity_constant(p);
  CHECK(mu == doctest::Approx(es.eigenvalues().minCoeff())
                  .epsilon(1e-6));
  CHECK(mu > 0.0);

  const auto ind = gen_feasibility(2, 2, 8, 31);
  CHECK_THROWS_AS((void)strong_convexity_constant(ind), ContractError);
}

TEST_CASE("problem json round-trips bit-identically") {
  const auto p = gen_regression(3, 2, 9, 41);
  const nlohmann::json j = problem_to_json(p);
  CHECK(j.at("schema") == "fedexprox-problem/v1");
  const auto back = problem_from_json(j);
  REQUIRE(back.n() == p.n());
  CHECK(back.d() == p.d());
  for (std::size_t i = 0; i < p.n(); ++i) {
    CHECK(same_bits(quad(back, i).A(), quad(p, i).A()));
    CHECK(same_bits(quad(back, i).b(), quad(p, i).b()));
    CHECK(back.client(i).id == p.client(i).id);
  }
  CHECK(back.interpolated());

  const auto f = gen_feasibility(2, 2, 6, 41);
  const auto f2 = problem_from_json(problem_to_json(f));
  const auto& a = std::get<AffineIndicatorObjective>(f.client(0).term);
  const auto& b = std::get<AffineIndicatorObjective>(f2.client(0).term);
  CHECK(same_bits(a.C(), b.C()));
  CHECK(same_bits(a.e(), b.e()));
}

TEST_CASE("problem json rejects malformed input") {
  const auto p = gen_example1(3, 1.0);
  nlohmann::json j = problem_to_json(p);

  nlohmann::json unknown = j;
  unknown["extra"] = 1;
  CHECK_THROWS_WITH_AS((void)problem_from_json(unknown),
                       doctest::Contains("unknown key"), ContractError);

  nlohmann::json bad_schema = j;
  bad_schema["schema"] = "fedexprox-problem/v2";
  CHECK_THROWS_AS((void)problem_from_json(bad_schema), ContractError);

  nlohmann::json bad_kind = j;
  bad_kind["clients"][0]["kind"] = "cubic";
  CHECK_THROWS_AS((void)problem_from_json(bad_kind), ContractError);

  nlohmann::json bad_shape = j;
  bad_shape["clients"][0]["A"]["rows"] = 2;
  CHECK_THROWS_AS((void)problem_from_json(bad_shape), ContractError);

  nlohmann::json client_extra = j;
  client_extra["clients"][0]["note"] = "x";
  CHECK_THROWS_AS((void)problem_from_json(client_extra), ContractError);

  nlohmann::json mismatch = j;
  mismatch["d"] = 7;
  CHECK_THROWS_AS((void)problem_from_json(mismatch), ContractError);

  CHECK_THROWS_AS((void)problem_from_json(nlohmann::json::array()),
                  ContractError);
}

TEST_CASE("problem files save and load through the filesystem") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fedexprox_test_problems";
  fs::create_directories(dir);
  const fs::path path = dir / "roundtrip.json";
  const auto p = gen_regression(2, 2, 8, 51);
  save_problem(p, path);
  const auto back = load_problem(path);
  CHECK(same_bits(quad(back, 0).A(), quad(p, 0).A()));
  CHECK(same_bits(quad(back, 1).b(), quad(p, 1).b()));

  const fs::path garbled = dir / "garbled.json";
  std::ofstream(garbled) << "{ not json";
  CHECK_THROWS_WITH_AS((void)load_problem(garbled),
                       doctest::Contains("parse failure"), ContractError);
  CHECK_THROWS_AS((void)load_problem(dir / "missing.json"), ContractError);
  fs::remove_all(dir);
}
