// reach.hpp — over-approximate reachable sets for boxes under constant
// inputs, via a center trajectory plus growth-bound radius dynamics.

#pragma once

#include <Eigen/Dense>
#include <vector>

#include "restartctl/dynamics.hpp"
#include "restartctl/geometry.hpp"

namespace rctl {

// The overflow flag trips when any mesh box along the computation leaves the
// declared operating box: the growth bound is unsupported out there, so
// callers must treat the result as "anywhere" (blocked transition, rejected
// command). Overflow is a value, not an error.
struct ReachBox {
  HyperInterval box;
  bool overflow = false;
};

// Over-approximation of the states reachable at exactly time tau from the box
// x0 under the constant input u. h is the RK4 mesh width.
ReachBox reach_over(const ControlSystem& sys, const HyperInterval& x0,
                    const Eigen::VectorXd& u, double tau, double h);

// Reach boxes at both horizons from one pass (tau_short < tau_long, both on
// the mesh by construction).
struct DualReach {
  HyperInterval at_short;
  HyperInterval at_long;
  bool overflow = false;  // either box left the operating region
};
DualReach reach_dual(const ControlSystem& sys, const HyperInterval& x0,
                     const Eigen::VectorXd& u, double tau_short,
                     double tau_long, double h);

// Tube over [0, tau]: boxes at the n_seg + 1 segment boundaries plus one
// enclosure per segment covering every mesh box in it, widened by a
// first-order bound on the drift between mesh points.
struct ReachTube {
  std::vector<double> times;            // n_seg + 1 boundary times
  std::vector<HyperInterval> at;        // boxes at those times
  std::vector<HyperInterval> segments;  // n_seg per-segment enclosures
  bool overflow = false;
};
ReachTube reach_tube(const ControlSystem& sys, const HyperInterval& x0,
                     const Eigen::VectorXd& u, double tau, int n_seg, double h);

// One control period ahead from a measured point under the command that was
// applied: the decision module's state predictor.
ReachBox predict_state(const ControlSystem& sys, const Eigen::VectorXd& x_prev,
                       const Eigen::VectorXd& u_prev, double tau_c, double h);

}  // namespace rctl
