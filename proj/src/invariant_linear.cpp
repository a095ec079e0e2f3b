#include "restartctl/invariant_linear.hpp"

#include <stdexcept>

#include "restartctl/linprog.hpp"

namespace rctl {

const char* inv_status_name(InvStatus s) {
  switch (s) {
    case InvStatus::Success: return "SUCCESS";
    case InvStatus::Empty: return "EMPTY";
    case InvStatus::BudgetExceeded: return "BUDGET_EXCEEDED";
  }
  return "?";
}

namespace {

// Constraints in (x, u) space whose projection onto x is the next iterate.
// The membership block uses the current iterate, which makes the shrinking
// chain exact: projecting a set that already contains [cur.A | 0] <= cur.b
// cannot leave cur.
HPolytope step_extended(const HPolytope& cur, const HPolytope& input_poly,
                        const DiscreteLinear& d, const HorizonMatrices& hold) {
  const Eigen::Index n = cur.dim();
  const Eigen::Index m = input_poly.dim();
  const Eigen::Index rows = 3 * cur.rows() + input_poly.rows();

  Eigen::MatrixXd A(rows, n + m);
  Eigen::VectorXd b(rows);
  Eigen::Index r = 0;

  A.block(r, 0, cur.rows(), n) = cur.A * d.Ad;
  A.block(r, n, cur.rows(), m) = cur.A * d.Bd;
  b.segment(r, cur.rows()) = cur.b;
  r += cur.rows();

  A.block(r, 0, cur.rows(), n) = cur.A * hold.A_hold;
  A.block(r, n, cur.rows(), m) = cur.A * hold.B_hold;
  b.segment(r, cur.rows()) = cur.b;
  r += cur.rows();

  A.block(r, 0, input_poly.rows(), n).setZero();
  A.block(r, n, input_poly.rows(), m) = input_poly.A;
  b.segment(r, input_poly.rows()) = input_poly.b;
  r += input_poly.rows();

  A.block(r, 0, cur.rows(), n) = cur.A;
  A.block(r, n, cur.rows(), m).setZero();
  b.segment(r, cur.rows()) = cur.b;

  return HPolytope(std::move(A), std::move(b));
}

}  // namespace

InvResult compute_inv_region(const HPolytope& safe_x,
                             const HPolytope& input_poly,
                             const DiscreteLinear& d,
                             const HorizonMatrices& hold,
                             const InvOptions& opt) {
  const Eigen::Index n = safe_x.dim();
  if (d.Ad.rows() != n || hold.A_hold.rows() != n)
    throw std::invalid_argument("inv region: dimension mismatch");
  if (d.Bd.cols() != input_poly.dim() || hold.B_hold.cols() != input_poly.dim())
    throw std::invalid_argument("inv region: input dimension mismatch");

  InvResult res;
  if (is_empty(safe_x)) {
    res.status = InvStatus::Empty;
    return res;
  }

  HPolytope cur = remove_redundant(safe_x);
  res.row_counts.push_back(cur.rows());

  for (int p = 0; p < opt.p_max; ++p) {
    const HPolytope ext = step_extended(cur, input_poly, d, hold);
    HPolytope next;
    try {
      next = project_to_states(ext, int(n), opt.row_cap);
    } catch (const ProjectionError&) {
      res.status = InvStatus::BudgetExceeded;
      res.iterations = p;
      return res;
    }
    res.iterations = p + 1;
    if (is_empty(next)) {
      res.status = InvStatus::Empty;
      return res;
    }
    next = remove_redundant(next);
    res.row_counts.push_back(next.rows());

    if (is_subset(cur, next, opt.subset_tol)) {
      res.status = InvStatus::Success;
      res.region = next;
      return res;
    }
    cur = std::move(next);
  }
  res.status = InvStatus::BudgetExceeded;
  return res;
}

std::optional<Eigen::VectorXd> BcLinear::choose(const Eigen::VectorXd& x) const {
  const Eigen::Index m = input_poly.dim();
  const Eigen::Index rr = region.rows();
  Eigen::MatrixXd A(input_poly.rows() + 2 * rr, m);
  Eigen::VectorXd b(A.rows());

  Eigen::Index r = 0;
  A.topRows(input_poly.rows()) = input_poly.A;
  b.head(input_poly.rows()) = input_poly.b;
  r += input_poly.rows();

  A.block(r, 0, rr, m) = region.A * d.Bd;
  b.segment(r, rr) = region.b - region.A * (d.Ad * x);
  r += rr;

  A.block(r, 0, rr, m) = region.A * hold.B_hold;
  b.segment(r, rr) = region.b - region.A * (hold.A_hold * x);

  const ChebyshevResult c = chebyshev_center(A, b);
  if (!c.feasible) return std::nullopt;
  return c.center;
}

}  // namespace rctl
