// linprog.cpp — two-phase revised simplex on the dual of max c.x s.t. Ax <= b.
//
// The dual reads: min b.y  s.t.  A^T y = c, y >= 0.  Its basis has dim(x)
// rows, so each iteration costs O(rows * dim) for pricing plus a tiny LU.
// The primal maximizer falls out of the optimal simplex multipliers: with
// basis columns B, pi = B^{-T} c_B satisfies a_j . pi = b_j on basic rows and
// a_j . pi <= b_j elsewhere (that inequality *is* the dual optimality test),
// so pi is a feasible primal point attaining the optimal value.

#include "restartctl/linprog.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace rctl {
namespace {

constexpr double kCostTol = 1e-9;   // reduced-cost threshold for entering
constexpr double kPivotTol = 1e-11; // smallest usable pivot magnitude
constexpr double kRadiusCap = 1e8;  // Chebyshev radius bound for unbounded sets

struct DualSimplex {
  // Standard-form data: minimize cost.y s.t. M y = rhs, y >= 0.
  // M is dim x rows (columns are the original constraint normals).
  Eigen::MatrixXd M;
  Eigen::VectorXd rhs;
  Eigen::VectorXd cost;
  int n_eq = 0;
  int n_real = 0;

  std::vector<int> basis;       // column index per equality row; >= n_real is artificial
  std::vector<char> is_basic;   // over real columns only
  Eigen::MatrixXd Binv;
  Eigen::VectorXd xB;
  Eigen::VectorXd pi;

  bool phase_one = true;
  long iterations = 0;
  long iteration_cap = 0;
  long degenerate_run = 0;  // consecutive zero-step pivots; drives the
                            // switch to Bland's rule and back

  explicit DualSimplex(const Eigen::MatrixXd& m, const Eigen::VectorXd& r,
                       const Eigen::VectorXd& co)
      : M(m), rhs(r), cost(co), n_eq(int(m.rows())), n_real(int(m.cols())) {
    basis.resize(n_eq);
    for (int i = 0; i < n_eq; ++i) basis[i] = n_real + i;  // artificials
    is_basic.assign(n_real, 0);
    iteration_cap = 20000 + 10L * n_real;
  }

  Eigen::VectorXd column(int j) const {
    if (j < n_real) return M.col(j);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n_eq);
    e(j - n_real) = 1.0;
    return e;
  }

  double column_cost(int j) const {
    if (phase_one) return j < n_real ? 0.0 : 1.0;
    return j < n_real ? cost(j) : 0.0;
  }

  void refactor() {
    Eigen::MatrixXd B(n_eq, n_eq);
    for (int i = 0; i < n_eq; ++i) B.col(i) = column(basis[i]);
    Binv = B.partialPivLu().inverse();
    if (!Binv.allFinite()) throw LpError("lp: singular basis");
    Eigen::VectorXd cB(n_eq);
    for (int i = 0; i < n_eq; ++i) cB(i) = column_cost(basis[i]);
    // One step of iterative refinement on both triangular solves. The dual
    // bases here routinely mix box rows of magnitude 1e4 with unit facet
    // normals; without the correction the recovered multipliers (the primal
    // point handed to callers) can miss by enough to flip redundancy
    // verdicts downstream.
    xB = Binv * rhs;
    xB += Binv * (rhs - B * xB);
    pi = Binv.transpose() * cB;
    pi += Binv.transpose() * (cB - B.transpose() * pi);
  }

  // Runs one simplex phase. Returns true on (phase-)optimality, false when the
  // phase-two objective is unbounded below (i.e. the primal is infeasible).
  bool run_phase() {
    for (;;) {
      if (++iterations > iteration_cap) throw LpError("lp: iteration limit");
      refactor();

      // Pricing. Eligibility uses a threshold scaled by the magnitudes that
      // went into the dot product: an absolute cutoff stalls on badly scaled
      // bases, where rounding noise in pi dwarfs it and parks the scan on a
      // sign-flipping column. The normal rule is Dantzig on the scaled
      // reduced cost; after a run of zero-step pivots it falls back to
      // Bland's smallest-index rule, whose termination argument breaks the
      // degenerate cycle, and progress switches back. Artificials never
      // re-enter once out.
      const bool bland = degenerate_run > 24;
      int enter = -1;
      double enter_score = 0.0;
      for (int j = 0; j < n_real; ++j) {
        if (is_basic[j]) continue;
        const double d = column_cost(j) - pi.dot(M.col(j));
        const double scale = 1.0 + std::abs(column_cost(j)) +
                             pi.cwiseAbs().dot(M.col(j).cwiseAbs());
        if (d >= -kCostTol * scale) continue;
        if (bland) { enter = j; break; }
        const double score = d / scale;
        if (enter < 0 || score < enter_score) {
          enter = j;
          enter_score = score;
        }
      }
      if (enter < 0) return true;

      const Eigen::VectorXd w = Binv * M.col(enter);

      // Ratio test. Rows with positive direction bound the step as usual. In
      // phase two an artificial stuck in the basis at level zero must never be
      // pushed positive, so such rows also block at step zero when w < 0.
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < n_eq; ++i) {
        double ratio;
        if (w(i) > kPivotTol) {
          ratio = xB(i) / w(i);
        } else if (!phase_one && basis[i] >= n_real && w(i) < -kPivotTol &&
                   std::abs(xB(i)) <= 1e-9) {
          ratio = 0.0;
        } else {
          continue;
        }
        if (leave < 0 || ratio < best - 1e-12 ||
            (ratio < best + 1e-12 && basis[i] < basis[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;  // phase objective unbounded below

      degenerate_run = best > 1e-12 ? 0 : degenerate_run + 1;
      if (basis[leave] < n_real) is_basic[basis[leave]] = 0;
      basis[leave] = enter;
      is_basic[enter] = 1;
    }
  }
};

}  // namespace

LpResult lp_maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                     const Eigen::VectorXd& b) {
  const int n = int(c.size());
  const int m = int(A.rows());
  if (A.cols() != n || b.size() != m)
    throw std::invalid_argument("lp_maximize: dimension mismatch");

  // Dual standard form: M = A^T (with rows sign-flipped so rhs >= 0), rhs = c.
  Eigen::MatrixXd M = A.transpose();
  Eigen::VectorXd rhs = c;
  Eigen::VectorXd sign = Eigen::VectorXd::Ones(n);
  for (int i = 0; i < n; ++i) {
    if (rhs(i) < 0.0) {
      rhs(i) = -rhs(i);
      M.row(i) = -M.row(i);
      sign(i) = -1.0;
    }
  }

  DualSimplex s(M, rhs, b);

  struct Dump {
    const Eigen::VectorXd& c;
    const Eigen::MatrixXd& A;
    const Eigen::VectorXd& b;
    void operator()() const {
      // Diagnostics: RCTL_LP_DUMP=<path> saves the (c, A, b) of a failing
      // solve in a plain text form that is easy to replay.
      const char* path = std::getenv("RCTL_LP_DUMP");
      if (!path || !*path) return;
      std::FILE* f = std::fopen(path, "wb");
      if (!f) return;
      std::fprintf(f, "%td %td\n", std::ptrdiff_t(A.rows()),
                   std::ptrdiff_t(A.cols()));
      for (Eigen::Index i = 0; i < A.rows(); ++i) {
        for (Eigen::Index j = 0; j < A.cols(); ++j)
          std::fprintf(f, "%.17g ", A(i, j));
        std::fprintf(f, "%.17g\n", b(i));
      }
      for (Eigen::Index j = 0; j < A.cols(); ++j)
        std::fprintf(f, "%.17g ", c(j));
      std::fprintf(f, "\n");
      std::fclose(f);
    }
  } dump{c, A, b};

  s.phase_one = true;
  try {
    if (!s.run_phase()) throw LpError("lp: phase one unbounded");
  } catch (const LpError&) {
    dump();
    throw;
  }
  s.refactor();
  double infeas = 0.0;
  for (int i = 0; i < s.n_eq; ++i)
    if (s.basis[i] >= s.n_real) infeas += std::abs(s.xB(i));
  const double tol1 = 1e-8 * (1.0 + rhs.lpNorm<Eigen::Infinity>());
  if (infeas > tol1) {
    // Dual infeasible: the primal is unbounded or empty.
    return {LpStatus::NoOptimum, 0.0, Eigen::VectorXd()};
  }

  s.phase_one = false;
  try {
    if (!s.run_phase()) {
      // Dual unbounded below, hence the primal set is empty.
      return {LpStatus::Infeasible, 0.0, Eigen::VectorXd()};
    }
  } catch (const LpError&) {
    dump();
    throw;
  }
  s.refactor();

  LpResult out;
  out.status = LpStatus::Optimal;
  out.x = sign.cwiseProduct(s.pi);
  out.value = c.dot(out.x);
  return out;
}

ChebyshevResult chebyshev_center(const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& b) {
  const int m = int(A.rows());
  const int n = int(A.cols());

  // Variables (x, r): maximize r s.t. a_i.x + |a_i| r <= b_i and r <= cap.
  Eigen::MatrixXd Ae(m + 1, n + 1);
  Eigen::VectorXd be(m + 1);
  for (int i = 0; i < m; ++i) {
    Ae.row(i).head(n) = A.row(i);
    Ae(i, n) = A.row(i).norm();
    be(i) = b(i);
  }
  Ae.row(m).setZero();
  Ae(m, n) = 1.0;
  be(m) = kRadiusCap;

  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1);
  c(n) = 1.0;

  const LpResult r = lp_maximize(c, Ae, be);
  if (r.status == LpStatus::Infeasible)
    return {false, Eigen::VectorXd(), 0.0};
  if (r.status != LpStatus::Optimal)
    throw LpError("chebyshev_center: unexpected solver status");

  ChebyshevResult out;
  out.radius = r.x(n);
  // A negative optimal radius certifies emptiness (every row can buy slack
  // via the radius variable, so the LP itself stays feasible).
  out.feasible = out.radius >= -1e-9;
  if (out.feasible) out.center = r.x.head(n);
  return out;
}

}  // namespace rctl
