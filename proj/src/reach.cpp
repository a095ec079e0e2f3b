// reach.cpp — fused RK4 integration of the box center and the growth-bound
// radius r' = K(u) r + w(u). With K Metzler and r0, w >= 0 the radius stays
// nonnegative; a cwiseMax(0) guards against roundoff at tiny radii.

#include "restartctl/reach.hpp"

#include <cmath>

namespace rctl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct CenterRadiusWalker {
  const ControlSystem& sys;
  const VectorXd& u;
  MatrixXd K;
  VectorXd w;
  VectorXd c, r;
  double t = 0.0;

  VectorXd k1, k2, k3, k4, tmp;   // center stages
  VectorXd q1, q2, q3, q4, rtmp;  // radius stages
  bool escaped = false;  // some mesh box left the operating region

  CenterRadiusWalker(const ControlSystem& s, const HyperInterval& x0,
                     const VectorXd& uu)
      : sys(s), u(uu) {
    if (!s.growth.jacobian_bound)
      throw std::invalid_argument(s.name + ": no growth model");
    if (!s.input_bounds.contains(uu))
      throw std::invalid_argument(s.name + ": input outside input_bounds");
    K = s.growth.jacobian_bound(uu);
    w = s.growth.disturbance ? s.growth.disturbance(uu)
                             : VectorXd::Zero(s.state_dim);
    for (int i = 0; i < K.rows(); ++i)
      for (int j = 0; j < K.cols(); ++j)
        if (i != j && K(i, j) < 0.0)
          throw std::invalid_argument(s.name + ": growth bound not Metzler");
    c = x0.center();
    r = x0.half_width();
    check_operating();
  }

  HyperInterval box() const { return HyperInterval(c - r, c + r); }

  void check_operating() {
    if (escaped) return;
    for (int i = 0; i < c.size(); ++i) {
      if (c(i) - r(i) < sys.operating_box.lower(i) - kGeomTol ||
          c(i) + r(i) > sys.operating_box.upper(i) + kGeomTol) {
        escaped = true;
        return;
      }
    }
  }

  void step(double hs) {
    sys.rhs(c, u, k1);
    q1 = K * r + w;
    tmp = c + 0.5 * hs * k1;
    rtmp = r + 0.5 * hs * q1;
    sys.rhs(tmp, u, k2);
    q2 = K * rtmp + w;
    tmp = c + 0.5 * hs * k2;
    rtmp = r + 0.5 * hs * q2;
    sys.rhs(tmp, u, k3);
    q3 = K * rtmp + w;
    tmp = c + hs * k3;
    rtmp = r + hs * q3;
    sys.rhs(tmp, u, k4);
    q4 = K * rtmp + w;
    c += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    r += (hs / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
    r = r.cwiseMax(0.0);
    t += hs;
    if (!c.allFinite() || !r.allFinite())
      throw IntegrationError(sys.name + ": reach computation diverged", t);
    check_operating();
  }

  // Per-dimension first-order bound on how far the center moves inside one
  // step, used to cover the gap between mesh boxes in tube enclosures.
  VectorXd drift(double hs) const {
    return hs * k1.cwiseAbs();  // k1 holds f(c, u) of the last step taken
  }
};

long step_count(double tau, double h) {
  if (tau <= 0.0 || h <= 0.0)
    throw std::invalid_argument("reach: need tau > 0 and h > 0");
  return std::max<long>(1, long(std::ceil(tau / h - 1e-12)));
}

}  // namespace

ReachBox reach_over(const ControlSystem& sys, const HyperInterval& x0,
                    const VectorXd& u, double tau, double h) {
  CenterRadiusWalker wk(sys, x0, u);
  const long steps = step_count(tau, h);
  for (long s = 0; s < steps; ++s)
    wk.step(s == steps - 1 ? tau - wk.t : h);
  ReachBox out;
  out.box = wk.box();
  out.overflow = wk.escaped;
  return out;
}

DualReach reach_dual(const ControlSystem& sys, const HyperInterval& x0,
                     const VectorXd& u, double tau_short, double tau_long,
                     double h) {
  if (!(tau_short > 0.0 && tau_long > tau_short))
    throw std::invalid_argument("reach_dual: need 0 < tau_short < tau_long");
  CenterRadiusWalker wk(sys, x0, u);

  long steps = step_count(tau_short, h);
  for (long s = 0; s < steps; ++s)
    wk.step(s == steps - 1 ? tau_short - wk.t : h);
  DualReach out;
  out.at_short = wk.box();

  const double rest = tau_long - tau_short;
  steps = step_count(rest, h);
  const double t1 = wk.t;
  for (long s = 0; s < steps; ++s)
    wk.step(s == steps - 1 ? t1 + rest - wk.t : h);
  out.at_long = wk.box();
  out.overflow = wk.escaped;
  return out;
}

ReachTube reach_tube(const ControlSystem& sys, const HyperInterval& x0,
                     const VectorXd& u, double tau, int n_seg, double h) {
  if (n_seg < 1) throw std::invalid_argument("reach_tube: n_seg must be >= 1");
  CenterRadiusWalker wk(sys, x0, u);

  ReachTube out;
  out.times.reserve(n_seg + 1);
  out.at.reserve(n_seg + 1);
  out.segments.reserve(n_seg);
  out.times.push_back(0.0);
  out.at.push_back(wk.box());

  for (int seg = 0; seg < n_seg; ++seg) {
    const double t_end = tau * (seg + 1) / n_seg;
    HyperInterval hull = wk.box();
    VectorXd slack = VectorXd::Zero(sys.state_dim);
    while (wk.t < t_end - 1e-12) {
      const double hs = std::min(h, t_end - wk.t);
      wk.step(hs);
      hull = HyperInterval::hull(hull, wk.box());
      slack = slack.cwiseMax(wk.drift(hs));
    }
    out.segments.push_back(hull.widened(slack));
    out.times.push_back(t_end);
    out.at.push_back(wk.box());
  }
  out.overflow = wk.escaped;
  return out;
}

ReachBox predict_state(const ControlSystem& sys, const VectorXd& x_prev,
                       const VectorXd& u_prev, double tau_c, double h) {
  return reach_over(sys, HyperInterval(x_prev, x_prev), u_prev, tau_c, h);
}

}  // namespace rctl
