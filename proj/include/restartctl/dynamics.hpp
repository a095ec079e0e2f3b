// dynamics.hpp — continuous-time control systems, fixed-step RK4 integration,
// linear-system discretization, and the two example plants.

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "restartctl/geometry.hpp"

namespace rctl {

// Component-wise growth model for over-approximate reachability. The radius
// dynamics r' = K(u) r + w(u) bound the spread of trajectories started in a
// box: K(u) is a Metzler (nonnegative off-diagonal) component-wise bound on
// the Jacobian over the operating box, w(u) >= 0 a disturbance bound.
struct GrowthModel {
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& u)> jacobian_bound;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& u)> disturbance;  // null => 0
  bool rigorous = true;  // false for sampled estimates, which prove nothing
};

struct ControlSystem {
  std::string name;
  int state_dim = 0;
  int input_dim = 0;
  std::function<void(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     Eigen::VectorXd& dx)> rhs;
  HyperInterval input_bounds;   // admissible input box
  HyperInterval operating_box;  // region where rhs and the growth bound hold
  GrowthModel growth;

  // Bounds-checked evaluation; rejects inputs outside input_bounds.
  void eval(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
            Eigen::VectorXd& dx) const;
};

struct IntegrationError : std::runtime_error {
  double t;
  IntegrationError(const std::string& what, double t_at)
      : std::runtime_error(what + " at t=" + std::to_string(t_at)), t(t_at) {}
};

// Classical fixed-step RK4 under a constant input; the final step is
// shortened so the mesh lands exactly on tau. Non-finite states raise
// IntegrationError carrying the time.
Eigen::VectorXd integrate(const ControlSystem& sys, const Eigen::VectorXd& x0,
                          const Eigen::VectorXd& u, double tau, double h);

// Every mesh state including both endpoints; size == ceil(tau/h) + 1.
std::vector<Eigen::VectorXd> dense_trajectory(const ControlSystem& sys,
                                              const Eigen::VectorXd& x0,
                                              const Eigen::VectorXd& u,
                                              double tau, double h);

struct LinearSystem {
  std::string name;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  HyperInterval input_bounds;
  int state_dim() const { return int(A.rows()); }
  int input_dim() const { return int(B.cols()); }
};

struct DiscreteLinear {
  Eigen::MatrixXd Ad;
  Eigen::MatrixXd Bd;
  double tau = 0.0;
};

// Zero-order-hold discretization by truncated exponential series (default
// order 20), with scaling-and-squaring when |A tau| is large enough to make
// the plain series inaccurate.
DiscreteLinear discretize(const LinearSystem& sys, double tau, int order = 20);

// Transition pair for an input held through a restart: x[k+m+1] =
// A_hold x[k] + B_hold u with A_hold = Ad^(m+1), B_hold = (Ad^m + ... + I) Bd.
struct HorizonMatrices {
  Eigen::MatrixXd A_hold;
  Eigen::MatrixXd B_hold;
  int m = 0;
};
HorizonMatrices horizon_matrices(const DiscreteLinear& d, int m);

// Inverted pendulum: xi1' = xi2, xi2' = -w^2 (sin xi1 + cos(xi1) u) - 2 g xi1
// with w = 1, g = 0.0125, u in [-4, 4].
ControlSystem pendulum_system();
// Saturated proportional mission controller u = clamp(2 (pi - xi1 - xi2)).
Eigen::VectorXd pendulum_mc(const Eigen::VectorXd& x);
// Printed safe-set polytope for the pendulum.
HPolytope pendulum_safe_set();

// Tandem-rotor 3-DOF helicopter: 6-state linear model plus the safe-set
// fixtures and the stand-in mission controller, loaded from a plant
// parameter file (see data/helicopter3dof.plant for the format).
struct HelicopterModel {
  LinearSystem sys;
  HPolytope safe_x;           // H_x x <= h_x
  HPolytope input_poly;       // H_u u <= h_u (kept verbatim from the fixture)
  HPolytope adjusted_safe_x;  // H_x x <= h_x^a, shrunk for inter-sample safety
  Eigen::MatrixXd mc_gain;    // mission controller u = clamp(K (x_sp - x))
  Eigen::VectorXd mc_setpoint;
};
HelicopterModel load_helicopter(const std::string& path);

// Input constraints actually used for synthesis and simulation: the fixture
// rows intersected with the plant's input box (the fixture alone leaves one
// direction unbounded).
HPolytope helicopter_input_poly(const HelicopterModel& hm);

// Wraps a linear model as a ControlSystem: rhs = Ax + Bu, growth bound
// K = |A| element-wise (valid globally), zero disturbance.
ControlSystem linear_as_control_system(const LinearSystem& sys,
                                       double operating_span = 1e6);

}  // namespace rctl
