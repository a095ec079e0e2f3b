#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "restartctl/dynamics.hpp"
#include "restartctl/geometry.hpp"
#include "restartctl/rng.hpp"

using namespace rctl;

namespace {

const std::string kDataDir = RCTL_DATA_DIR;

ControlSystem constant_rhs(double v) {
  ControlSystem sys;
  sys.name = "drift";
  sys.state_dim = 1;
  sys.input_dim = 1;
  sys.rhs = [v](const Eigen::VectorXd&, const Eigen::VectorXd&,
                Eigen::VectorXd& dx) { dx.setConstant(v); };
  sys.input_bounds = HyperInterval(Eigen::VectorXd::Constant(1, -1),
                                   Eigen::VectorXd::Constant(1, 1));
  sys.operating_box = HyperInterval(Eigen::VectorXd::Constant(1, -100),
                                    Eigen::VectorXd::Constant(1, 100));
  sys.growth.jacobian_bound = [](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(1, 1);
  };
  return sys;
}

ControlSystem integrator() {
  ControlSystem sys = constant_rhs(0.0);
  sys.name = "integrator";
  sys.input_bounds = HyperInterval(Eigen::VectorXd::Constant(1, -4),
                                   Eigen::VectorXd::Constant(1, 4));
  sys.rhs = [](const Eigen::VectorXd&, const Eigen::VectorXd& u,
               Eigen::VectorXd& dx) { dx = u; };
  return sys;
}

}  // namespace

TEST_CASE("zero vector field is the identity flow") {
  const ControlSystem sys = constant_rhs(0.0);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Constant(1, 0.37);
  const Eigen::VectorXd u = Eigen::VectorXd::Zero(1);
  CHECK(integrate(sys, x0, u, 1.0, 0.01) == x0);
  for (const auto& x : dense_trajectory(sys, x0, u, 0.5, 0.01))
    CHECK(x == x0);
}

TEST_CASE("pure input integrator moves linearly in time") {
  const ControlSystem sys = integrator();
  const Eigen::VectorXd x =
      integrate(sys, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 3),
                0.05, 0.001);
  CHECK(x(0) == doctest::Approx(0.15).epsilon(1e-12));
}

TEST_CASE("mesh has ceil(tau/h) + 1 points and lands exactly on tau") {
  const ControlSystem sys = constant_rhs(1.0);
  const auto mesh = dense_trajectory(sys, Eigen::VectorXd::Zero(1),
                                     Eigen::VectorXd::Zero(1), 0.05, 0.003);
  CHECK(mesh.size() == std::size_t(std::ceil(0.05 / 0.003)) + 1);
  CHECK(mesh.back()(0) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("divergence reports the failure time") {
  ControlSystem sys = constant_rhs(0.0);
  sys.rhs = [](const Eigen::VectorXd& x, const Eigen::VectorXd&,
               Eigen::VectorXd& dx) { dx = x.array().square().matrix() * 50.0; };
  bool threw = false;
  try {
    integrate(sys, Eigen::VectorXd::Constant(1, 1.0),
              Eigen::VectorXd::Zero(1), 10.0, 0.01);
  } catch (const IntegrationError& e) {
    threw = true;
    CHECK(e.t > 0.0);
    CHECK(e.t <= 10.0);
  }
  CHECK(threw);
}

TEST_CASE("pendulum vector field at the upright setpoint") {
  const ControlSystem sys = pendulum_system();
  CHECK(sys.state_dim == 2);
  CHECK(sys.input_dim == 1);
  Eigen::VectorXd dx(2);
  sys.eval(Eigen::Vector2d(M_PI, 0.0), Eigen::VectorXd::Zero(1), dx);
  CHECK(dx(0) == doctest::Approx(0.0).epsilon(1e-15));
  // -sin(pi) is exactly the tiny residual of pi in doubles; the dominant
  // term is the -2*gamma*xi1 spring: -0.025*pi.
  CHECK(dx(1) == doctest::Approx(-0.025 * M_PI).epsilon(1e-12));

  sys.eval(Eigen::Vector2d(0.0, 0.0), Eigen::VectorXd::Zero(1), dx);
  CHECK(dx == Eigen::Vector2d(0, 0));

  CHECK_THROWS_AS(
      sys.eval(Eigen::Vector2d(M_PI, 0.0), Eigen::VectorXd::Constant(1, 5.0),
               dx),
      std::invalid_argument);
}

TEST_CASE("pendulum mission controller saturates at the input bounds") {
  CHECK(pendulum_mc(Eigen::Vector2d(M_PI, 0.0))(0) == doctest::Approx(0.0));
  CHECK(pendulum_mc(Eigen::Vector2d(M_PI - 1.0, 0.0))(0) ==
        doctest::Approx(2.0));
  CHECK(pendulum_mc(Eigen::Vector2d(0.0, 0.0))(0) == doctest::Approx(4.0));
  CHECK(pendulum_mc(Eigen::Vector2d(2 * M_PI, 2.0))(0) ==
        doctest::Approx(-4.0));
}

TEST_CASE("pendulum closed loop under the mission controller settles") {
  // The proportional law leaves a small steady-state droop against the
  // -2*gamma*xi1 spring term; the loop must come to rest near (pi, 0).
  const ControlSystem sys = pendulum_system();
  Eigen::VectorXd x = Eigen::Vector2d(3.0, 0.0);
  for (int k = 0; k < 400; ++k)
    x = integrate(sys, x, pendulum_mc(x), 0.05, 0.001);
  CHECK(std::abs(x(0) - M_PI) < 0.1);
  CHECK(std::abs(x(1)) < 1e-3);
  Eigen::VectorXd dx(2);
  sys.eval(x, pendulum_mc(x), dx);
  CHECK(dx.lpNorm<Eigen::Infinity>() < 1e-3);
}

TEST_CASE("rk4 shows fourth-order convergence on the pendulum") {
  const ControlSystem sys = pendulum_system();
  const Eigen::Vector2d x0(3.04, -0.8);
  const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, 3.0);
  const Eigen::VectorXd ref = integrate(sys, x0, u, 0.3, 1e-5);
  const double e1 = (integrate(sys, x0, u, 0.3, 0.01) - ref).norm();
  const double e2 = (integrate(sys, x0, u, 0.3, 0.005) - ref).norm();
  const double ratio = e1 / e2;
  CHECK(ratio > 8.0);
  CHECK(ratio < 40.0);
}

TEST_CASE("discretization of a zero flow matrix collapses the series") {
  LinearSystem sys;
  sys.A = Eigen::MatrixXd::Zero(2, 2);
  sys.B = (Eigen::MatrixXd(2, 1) << 1, 2).finished();
  const DiscreteLinear d = discretize(sys, 0.3);
  CHECK(d.Ad == Eigen::MatrixXd::Identity(2, 2));
  CHECK((d.Bd - 0.3 * sys.B).lpNorm<Eigen::Infinity>() < 1e-15);
}

TEST_CASE("scalar discretization matches the closed-form exponential") {
  LinearSystem sys;
  sys.A = Eigen::MatrixXd::Constant(1, 1, 1.3);
  sys.B = Eigen::MatrixXd::Constant(1, 1, 1.0);
  const DiscreteLinear d = discretize(sys, 0.05);
  CHECK(d.Ad(0, 0) == doctest::Approx(std::exp(0.065)).epsilon(1e-12));
  CHECK(d.Bd(0, 0) ==
        doctest::Approx((std::exp(0.065) - 1.0) / 1.3).epsilon(1e-12));

  // Large |A tau| exercises the scaling-and-squaring path.
  sys.A(0, 0) = 100.0;
  const DiscreteLinear big = discretize(sys, 0.05);
  CHECK(big.Ad(0, 0) == doctest::Approx(std::exp(5.0)).epsilon(1e-9));
}

TEST_CASE("double integrator discretizes exactly") {
  LinearSystem sys;
  sys.A = (Eigen::MatrixXd(2, 2) << 0, 1, 0, 0).finished();
  sys.B = (Eigen::MatrixXd(2, 1) << 0, 1).finished();
  const DiscreteLinear d = discretize(sys, 0.05);
  CHECK(d.Ad(0, 0) == doctest::Approx(1.0));
  CHECK(d.Ad(0, 1) == doctest::Approx(0.05));
  CHECK(d.Ad(1, 0) == doctest::Approx(0.0));
  CHECK(d.Ad(1, 1) == doctest::Approx(1.0));
  CHECK(d.Bd(0, 0) == doctest::Approx(0.00125).epsilon(1e-12));
  CHECK(d.Bd(1, 0) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("discretization agrees with dense integration on random systems") {
  DetRng rng(909);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + int(rng.below(3));
    LinearSystem sys;
    sys.A.resize(n, n);
    sys.B.resize(n, 1);
    for (int i = 0; i < n; ++i) {
      sys.B(i, 0) = rng.uniform(-1.0, 1.0);
      for (int j = 0; j < n; ++j) sys.A(i, j) = rng.uniform(-2.0, 2.0);
    }
    sys.input_bounds = HyperInterval(Eigen::VectorXd::Constant(1, -2),
                                     Eigen::VectorXd::Constant(1, 2));
    const DiscreteLinear d = discretize(sys, 0.05);

    const ControlSystem cs = linear_as_control_system(sys);
    Eigen::VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0(i) = rng.uniform(-1.0, 1.0);
    const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, rng.uniform(-1, 1));
    const Eigen::VectorXd xd = d.Ad * x0 + d.Bd * u;
    const Eigen::VectorXd xi = integrate(cs, x0, u, 0.05, 0.0005);
    CHECK((xd - xi).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("held-input horizon matrices") {
  LinearSystem sys;
  sys.A = (Eigen::MatrixXd(2, 2) << 0, 1, 0, 0).finished();
  sys.B = (Eigen::MatrixXd(2, 1) << 0, 1).finished();
  const DiscreteLinear d = discretize(sys, 0.05);

  SUBCASE("identity step doubles the input effect at m=1") {
    DiscreteLinear id;
    id.Ad = Eigen::MatrixXd::Identity(2, 2);
    id.Bd = d.Bd;
    id.tau = 0.05;
    const HorizonMatrices h = horizon_matrices(id, 1);
    CHECK(h.A_hold == Eigen::MatrixXd::Identity(2, 2));
    CHECK((h.B_hold - 2.0 * d.Bd).lpNorm<Eigen::Infinity>() < 1e-15);
  }

  SUBCASE("nilpotent-to-zero step keeps only the direct term") {
    DiscreteLinear z;
    z.Ad = Eigen::MatrixXd::Zero(2, 2);
    z.Bd = d.Bd;
    z.tau = 0.05;
    const HorizonMatrices h = horizon_matrices(z, 3);
    CHECK(h.A_hold == Eigen::MatrixXd::Zero(2, 2));
    CHECK(h.B_hold == d.Bd);
  }

  SUBCASE("hold equals m+1 composed single steps") {
    const HorizonMatrices h = horizon_matrices(d, 5);
    DetRng rng(42);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd x(2);
      x << rng.uniform(-1, 1), rng.uniform(-1, 1);
      const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, rng.uniform(-1, 1));
      Eigen::VectorXd step = x;
      for (int k = 0; k < 6; ++k) step = d.Ad * step + d.Bd * u;
      const Eigen::VectorXd hold = h.A_hold * x + h.B_hold * u;
      CHECK((step - hold).lpNorm<Eigen::Infinity>() < 1e-9);
    }
  }
}

TEST_CASE("helicopter fixture loads with the published constraint data") {
  const HelicopterModel hm = load_helicopter(kDataDir + "/helicopter3dof.plant");
  CHECK(hm.sys.state_dim() == 6);
  CHECK(hm.sys.input_dim() == 2);
  CHECK(hm.safe_x.rows() == 6);
  CHECK(hm.input_poly.rows() == 4);
  for (int i = 0; i < 4; ++i)
    CHECK(hm.input_poly.b(i) == doctest::Approx(1.1));
  // The published input matrix repeats its first row verbatim.
  CHECK(hm.input_poly.A.row(0) == hm.input_poly.A.row(1));

  const Eigen::VectorXd ha = (Eigen::VectorXd(6) << 0.1418, 0.1418, 0.2828,
                              0.2828, 0.0825, 0.0825)
                                 .finished();
  CHECK(hm.adjusted_safe_x.b == ha);
  CHECK(hm.adjusted_safe_x.A == hm.safe_x.A);

  // Plain kinematics: position rows integrate the velocity states.
  CHECK(hm.sys.A(0, 3) == doctest::Approx(1.0));
  CHECK(hm.sys.A(1, 4) == doctest::Approx(1.0));
  CHECK(hm.sys.A(2, 5) == doctest::Approx(1.0));
}

TEST_CASE("usable helicopter input set is bounded in every direction") {
  const HelicopterModel hm = load_helicopter(kDataDir + "/helicopter3dof.plant");
  const HPolytope u = helicopter_input_poly(hm);
  for (int i = 0; i < 2; ++i) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(2);
    dir(i) = 1.0;
    CHECK(support_value(u, dir) <= 1.1 + 1e-9);
    CHECK(support_value(u, -dir) <= 1.1 + 1e-9);
  }
  // The published rows alone leave +v_l unbounded; the physical voltage box
  // must be what closes it.
  CHECK(support_value(u, Eigen::Vector2d(1, 0)) == doctest::Approx(1.1));
}

TEST_CASE("wrapping a linear system keeps its field and bounds") {
  LinearSystem sys;
  sys.name = "wrap";
  sys.A = (Eigen::MatrixXd(2, 2) << 0, 1, -1, 0).finished();
  sys.B = (Eigen::MatrixXd(2, 1) << 0, 1).finished();
  sys.input_bounds = HyperInterval(Eigen::VectorXd::Constant(1, -2),
                                   Eigen::VectorXd::Constant(1, 2));
  const ControlSystem cs = linear_as_control_system(sys);
  Eigen::VectorXd dx(2);
  cs.eval(Eigen::Vector2d(0.3, -0.7), Eigen::VectorXd::Constant(1, 0.5), dx);
  CHECK(dx(0) == doctest::Approx(-0.7));
  CHECK(dx(1) == doctest::Approx(-0.3 + 0.5));
  const Eigen::MatrixXd K =
      cs.growth.jacobian_bound(Eigen::VectorXd::Constant(1, 0.5));
  CHECK(K == sys.A.cwiseAbs());
}
