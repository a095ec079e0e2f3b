#include <Eigen/Dense>

#include "doctest.h"
#include "oracles.hpp"
#include "restartctl/linprog.hpp"
#include "restartctl/rng.hpp"

using namespace rctl;

namespace {

HPolytope box2(double lo, double hi) {
  Eigen::MatrixXd A(4, 2);
  A << 1, 0, -1, 0, 0, 1, 0, -1;
  Eigen::VectorXd b(4);
  b << hi, -lo, hi, -lo;
  return HPolytope(A, b);
}

}  // namespace

TEST_CASE("scalar maximum against a single bound") {
  Eigen::MatrixXd A(1, 1);
  A << 1;
  Eigen::VectorXd b(1), c(1);
  b << 1;
  c << 1;
  const LpResult r = lp_maximize(c, A, b);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.value == doctest::Approx(1.0));
  CHECK(r.x(0) == doctest::Approx(1.0));
}

TEST_CASE("corner of the unit box") {
  const HPolytope p = box2(-1.0, 1.0);
  Eigen::VectorXd c(2);
  c << 1, 1;
  const LpResult r = lp_maximize(c, p.A, p.b);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.value == doctest::Approx(2.0));
  CHECK(r.x(0) == doctest::Approx(1.0));
  CHECK(r.x(1) == doctest::Approx(1.0));
}

TEST_CASE("contradictory half-spaces are infeasible") {
  Eigen::MatrixXd A(2, 1);
  A << 1, -1;
  Eigen::VectorXd b(2), c(1);
  b << -1, -1;  // x <= -1 and x >= 1
  c << 1;
  CHECK(lp_maximize(c, A, b).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded objective reports no optimum") {
  Eigen::MatrixXd A(1, 1);
  A << -1;
  Eigen::VectorXd b(1), c(1);
  b << 0;  // x >= 0
  c << 1;
  CHECK(lp_maximize(c, A, b).status == LpStatus::NoOptimum);
}

TEST_CASE("duplicated and scaled rows do not disturb the optimum") {
  Eigen::MatrixXd A(5, 2);
  A << 1, 0, 2, 0, 1, 0, 0, 1, 0, -1;
  Eigen::VectorXd b(5), c(2);
  b << 1, 2, 1, 0.5, 0.5;
  c << 1, 0;
  const LpResult r = lp_maximize(c, A, b);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.value == doctest::Approx(1.0));
}

TEST_CASE("optimal value matches vertex enumeration on random instances") {
  DetRng rng(11);
  for (int trial = 0; trial < 120; ++trial) {
    const int dim = 2 + int(rng.below(3));
    const HPolytope p = oracle::random_polytope(rng, dim, 3, 2.0);
    const auto verts = oracle::vertices(p);
    REQUIRE(!verts.empty());
    Eigen::VectorXd c(dim);
    for (int i = 0; i < dim; ++i) c(i) = rng.uniform(-1.0, 1.0);
    const LpResult r = lp_maximize(c, p.A, p.b);
    REQUIRE(r.status == LpStatus::Optimal);
    const double ref = oracle::max_over_vertices(verts, c);
    CHECK(r.value == doctest::Approx(ref).epsilon(1e-6));
    CHECK(((p.A * r.x - p.b).array() <= 1e-7).all());
  }
}

TEST_CASE("repeat solves return identical maximizers") {
  DetRng rng(5);
  const HPolytope p = oracle::random_polytope(rng, 3, 5, 1.0);
  Eigen::VectorXd c(3);
  c << 0.3, -0.8, 0.51;
  const LpResult a = lp_maximize(c, p.A, p.b);
  const LpResult b = lp_maximize(c, p.A, p.b);
  REQUIRE(a.status == LpStatus::Optimal);
  CHECK(a.value == b.value);
  CHECK(a.x == b.x);
}

TEST_CASE("chebyshev center of the unit box") {
  const HPolytope p = box2(-1.0, 1.0);
  const ChebyshevResult r = chebyshev_center(p.A, p.b);
  REQUIRE(r.feasible);
  CHECK(r.center.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.radius == doctest::Approx(1.0));
}

TEST_CASE("chebyshev center of an empty set is infeasible") {
  Eigen::MatrixXd A(2, 1);
  A << 1, -1;
  Eigen::VectorXd b(2);
  b << -1, -1;
  CHECK(!chebyshev_center(A, b).feasible);
}

TEST_CASE("chebyshev center of an unbounded set is still a witness point") {
  Eigen::MatrixXd A(1, 2);  // half-plane x <= 1
  A << 1, 0;
  Eigen::VectorXd b(1);
  b << 1;
  const ChebyshevResult r = chebyshev_center(A, b);
  REQUIRE(r.feasible);
  CHECK(r.center(0) <= 1.0 + 1e-9);
  CHECK(r.radius > 0.0);
}

TEST_CASE("chebyshev center stays interior on random polytopes") {
  DetRng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const int dim = 2 + int(rng.below(3));
    const HPolytope p = oracle::random_polytope(rng, dim, 4, 1.5);
    const ChebyshevResult r = chebyshev_center(p.A, p.b);
    REQUIRE(r.feasible);
    // Each unit-normalized slack must be at least the reported radius.
    for (int i = 0; i < p.rows(); ++i) {
      const double norm = p.A.row(i).norm();
      const double slack = (p.b(i) - p.A.row(i).dot(r.center)) / norm;
      CHECK(slack >= r.radius - 1e-7);
    }
  }
}
