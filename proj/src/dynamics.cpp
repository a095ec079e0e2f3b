// dynamics.cpp — integration, discretization, and the example plants.

#include "restartctl/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace rctl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void ControlSystem::eval(const VectorXd& x, const VectorXd& u, VectorXd& dx) const {
  if (x.size() != state_dim || u.size() != input_dim)
    throw std::invalid_argument(name + ": dimension mismatch in rhs");
  if (!input_bounds.contains(u))
    throw std::invalid_argument(name + ": input outside input_bounds");
  rhs(x, u, dx);
}

namespace {

// Shared RK4 core: calls visit(t, x) at every mesh point including both ends.
template <typename Visit>
void rk4_walk(const ControlSystem& sys, const VectorXd& x0, const VectorXd& u,
              double tau, double h, Visit&& visit) {
  if (tau < 0.0 || h <= 0.0)
    throw std::invalid_argument("integrate: need tau >= 0 and h > 0");
  if (!sys.input_bounds.contains(u))
    throw std::invalid_argument(sys.name + ": input outside input_bounds");

  VectorXd x = x0;
  visit(0.0, x);
  if (tau == 0.0) return;

  const long steps = std::max<long>(1, long(std::ceil(tau / h - 1e-12)));
  VectorXd k1(x.size()), k2(x.size()), k3(x.size()), k4(x.size()), tmp(x.size());
  double t = 0.0;
  for (long s = 0; s < steps; ++s) {
    const double hs = (s == steps - 1) ? tau - t : h;
    sys.rhs(x, u, k1);
    tmp = x + 0.5 * hs * k1;
    sys.rhs(tmp, u, k2);
    tmp = x + 0.5 * hs * k2;
    sys.rhs(tmp, u, k3);
    tmp = x + hs * k3;
    sys.rhs(tmp, u, k4);
    x += (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += hs;
    if (!x.allFinite())
      throw IntegrationError(sys.name + ": state diverged", t);
    visit(t, x);
  }
}

}  // namespace

VectorXd integrate(const ControlSystem& sys, const VectorXd& x0,
                   const VectorXd& u, double tau, double h) {
  VectorXd last = x0;
  rk4_walk(sys, x0, u, tau, h, [&](double, const VectorXd& x) { last = x; });
  return last;
}

std::vector<VectorXd> dense_trajectory(const ControlSystem& sys,
                                       const VectorXd& x0, const VectorXd& u,
                                       double tau, double h) {
  std::vector<VectorXd> out;
  rk4_walk(sys, x0, u, tau, h, [&](double, const VectorXd& x) { out.push_back(x); });
  return out;
}

DiscreteLinear discretize(const LinearSystem& sys, double tau, int order) {
  if (tau <= 0.0) throw std::invalid_argument("discretize: tau must be positive");
  if (order < 1) throw std::invalid_argument("discretize: order must be >= 1");
  const int n = sys.state_dim();

  // Scale down until |A tau'| <= 1 so the truncated series is accurate, then
  // square back up: A_{2t} = A_t^2, B_{2t} = (A_t + I) B_t.
  int squarings = 0;
  double taus = tau;
  while ((sys.A * taus).cwiseAbs().rowwise().sum().maxCoeff() > 1.0) {
    taus *= 0.5;
    ++squarings;
  }

  // Ad = sum_k (A tau)^k / k!, Bint = sum_k A^k tau^{k+1} / (k+1)!
  MatrixXd term = MatrixXd::Identity(n, n);
  MatrixXd Ad = term;
  MatrixXd Bint = taus * term;
  for (int k = 1; k <= order; ++k) {
    term = (term * sys.A) * (taus / k);
    Ad += term;
    Bint += term * (taus / (k + 1));
  }
  MatrixXd Bd = Bint * sys.B;

  for (int s = 0; s < squarings; ++s) {
    Bd = Ad * Bd + Bd;
    Ad = Ad * Ad;
  }
  return {Ad, Bd, tau};
}

HorizonMatrices horizon_matrices(const DiscreteLinear& d, int m) {
  if (m < 1) throw std::invalid_argument("horizon_matrices: m must be >= 1");
  const int n = int(d.Ad.rows());
  MatrixXd power = MatrixXd::Identity(n, n);  // Ad^i
  MatrixXd sum = MatrixXd::Zero(n, n);        // I + Ad + ... + Ad^m
  for (int i = 0; i <= m; ++i) {
    sum += power;
    power = power * d.Ad;
  }
  return {power, sum * d.Bd, m};  // power == Ad^(m+1) after the loop
}

ControlSystem pendulum_system() {
  constexpr double omega = 1.0;
  constexpr double gamma = 0.0125;

  ControlSystem sys;
  sys.name = "pendulum";
  sys.state_dim = 2;
  sys.input_dim = 1;
  sys.rhs = [](const VectorXd& x, const VectorXd& u, VectorXd& dx) {
    dx.resize(2);
    dx(0) = x(1);
    dx(1) = -omega * omega * (std::sin(x(0)) + std::cos(x(0)) * u(0)) -
            2.0 * gamma * x(0);
  };

  VectorXd ulo(1), uhi(1);
  ulo << -4.0;
  uhi << 4.0;
  sys.input_bounds = HyperInterval(ulo, uhi);

  VectorXd xlo(2), xhi(2);
  xlo << 0.70 * M_PI, -1.4;
  xhi << 1.30 * M_PI, 1.4;
  sys.operating_box = HyperInterval(xlo, xhi);

  // |d f2 / d xi1| <= w^2 (max|cos| + max|sin| |u|) + 2 g over the operating
  // box; max|cos| = 1 (xi1 = pi lies inside), max|sin| = sin(0.70 pi).
  const double sin_max = std::sin(0.70 * M_PI);
  sys.growth.jacobian_bound = [sin_max](const VectorXd& u) {
    MatrixXd K = MatrixXd::Zero(2, 2);
    K(0, 1) = 1.0;
    K(1, 0) = omega * omega * (1.0 + sin_max * std::abs(u(0))) + 2.0 * gamma;
    return K;
  };
  sys.growth.disturbance = nullptr;
  sys.growth.rigorous = true;
  return sys;
}

VectorXd pendulum_mc(const VectorXd& x) {
  VectorXd u(1);
  u(0) = std::clamp(2.0 * (M_PI - x(0) - x(1)), -4.0, 4.0);
  return u;
}

HPolytope pendulum_safe_set() {
  MatrixXd H(4, 2);
  H << -1, 0,
        1, 0,
        0, -1,
        0, 1;
  VectorXd h(4);
  h << -0.75 * M_PI, 1.25 * M_PI, 1.0, 1.0;
  return HPolytope(std::move(H), std::move(h));
}

namespace {

struct PlantFile {
  std::map<std::string, std::vector<double>> nums;
  std::map<std::string, std::string> strs;
};

PlantFile parse_plant_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("plant file: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# rctl-plant v1", 0) != 0)
    throw std::runtime_error("plant file: bad header in " + path);

  PlantFile pf;
  std::string cur_key;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    bool first = true;
    while (ls >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      const bool numeric = end && *end == '\0';
      if (first && !numeric) {
        cur_key = tok;
        first = false;
        std::string rest;
        // A key taking a single non-numeric token is a string value.
        if (ls >> rest) {
          char* e2 = nullptr;
          std::strtod(rest.c_str(), &e2);
          if (e2 && *e2 == '\0') {
            pf.nums[cur_key].push_back(std::strtod(rest.c_str(), nullptr));
          } else {
            pf.strs[cur_key] = rest;
          }
        }
        continue;
      }
      if (cur_key.empty())
        throw std::runtime_error("plant file: value before any key in " + path);
      if (!numeric)
        throw std::runtime_error("plant file: bad number '" + tok + "' in " + path);
      pf.nums[cur_key].push_back(v);
      first = false;
    }
  }
  return pf;
}

const std::vector<double>& need(const PlantFile& pf, const std::string& key,
                                std::size_t count, const std::string& path) {
  const auto it = pf.nums.find(key);
  if (it == pf.nums.end())
    throw std::runtime_error("plant file: missing key '" + key + "' in " + path);
  if (it->second.size() != count)
    throw std::runtime_error("plant file: key '" + key + "' expects " +
                             std::to_string(count) + " values in " + path);
  for (double v : it->second)
    if (!std::isfinite(v))
      throw std::runtime_error("plant file: non-finite value under '" + key +
                               "' in " + path);
  return it->second;
}

MatrixXd as_matrix(const std::vector<double>& v, int rows, int cols) {
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = v[std::size_t(i) * cols + j];
  return m;
}

VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), long(v.size()));
}

}  // namespace

HelicopterModel load_helicopter(const std::string& path) {
  const PlantFile pf = parse_plant_file(path);

  const int n = int(need(pf, "state_dim", 1, path)[0]);
  const int p = int(need(pf, "input_dim", 1, path)[0]);
  if (n < 1 || p < 1)
    throw std::runtime_error("plant file: bad dimensions in " + path);

  HelicopterModel hm;
  hm.sys.name = pf.strs.count("name") ? pf.strs.at("name") : "linear-plant";
  hm.sys.A = as_matrix(need(pf, "A", std::size_t(n) * n, path), n, n);
  hm.sys.B = as_matrix(need(pf, "B", std::size_t(n) * p, path), n, p);
  hm.sys.input_bounds = HyperInterval(as_vector(need(pf, "input_lb", p, path)),
                                      as_vector(need(pf, "input_ub", p, path)));

  const int qx = int(need(pf, "safe_rows", 1, path)[0]);
  const int qu = int(need(pf, "input_rows", 1, path)[0]);
  hm.safe_x = HPolytope(as_matrix(need(pf, "safe_H", std::size_t(qx) * n, path), qx, n),
                        as_vector(need(pf, "safe_h", qx, path)));
  hm.input_poly =
      HPolytope(as_matrix(need(pf, "input_H", std::size_t(qu) * p, path), qu, p),
                as_vector(need(pf, "input_h", qu, path)));
  hm.adjusted_safe_x = HPolytope(hm.safe_x.A, as_vector(need(pf, "adjusted_h", qx, path)));

  hm.mc_gain = as_matrix(need(pf, "mc_gain", std::size_t(p) * n, path), p, n);
  hm.mc_setpoint = as_vector(need(pf, "mc_setpoint", n, path));
  return hm;
}

HPolytope helicopter_input_poly(const HelicopterModel& hm) {
  const HPolytope box = HPolytope::from_box(hm.sys.input_bounds);
  const Eigen::Index q = hm.input_poly.rows();
  Eigen::MatrixXd A(q + box.rows(), hm.input_poly.dim());
  Eigen::VectorXd b(A.rows());
  A.topRows(q) = hm.input_poly.A;
  b.head(q) = hm.input_poly.b;
  A.bottomRows(box.rows()) = box.A;
  b.tail(box.rows()) = box.b;
  return canonicalized(HPolytope(std::move(A), std::move(b)));
}

ControlSystem linear_as_control_system(const LinearSystem& lin, double operating_span) {
  ControlSystem sys;
  sys.name = lin.name;
  sys.state_dim = lin.state_dim();
  sys.input_dim = lin.input_dim();
  const MatrixXd A = lin.A;
  const MatrixXd B = lin.B;
  sys.rhs = [A, B](const VectorXd& x, const VectorXd& u, VectorXd& dx) {
    dx = A * x + B * u;
  };
  sys.input_bounds = lin.input_bounds;
  sys.operating_box = HyperInterval(VectorXd::Constant(sys.state_dim, -operating_span),
                                    VectorXd::Constant(sys.state_dim, operating_span));
  const MatrixXd Kabs = A.cwiseAbs();
  sys.growth.jacobian_bound = [Kabs](const VectorXd&) { return Kabs; };
  sys.growth.disturbance = nullptr;
  sys.growth.rigorous = true;
  return sys;
}

}  // namespace rctl
