// linprog.hpp — deterministic dense simplex solver for the small-dimension,
// many-constraint linear programs used by the geometry layer.

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace rctl {

enum class LpStatus {
  Optimal,     // finite optimum found; x and value are valid
  Infeasible,  // the constraint set {x : Ax <= b} is empty
  NoOptimum,   // objective unbounded above, or the set is empty; callers that
               // need to tell the two apart test emptiness separately
};

struct LpResult {
  LpStatus status = LpStatus::NoOptimum;
  double value = 0.0;
  Eigen::VectorXd x;  // maximizer, valid only when status == Optimal
};

// Thrown when the solver exceeds its iteration budget or hits a numerically
// singular basis. Deliberately distinct from Infeasible: an empty set is an
// answer, a stalled solve is not.
struct LpError : std::runtime_error {
  explicit LpError(const std::string& what) : std::runtime_error(what) {}
};

// Maximize c.x subject to A x <= b, x free. Deterministic pivoting: scaled
// largest-reduced-cost pricing, falling back to Bland's rule after a run of
// degenerate steps so cycling terminates. Internally solves the dual in
// standard form, so per-iteration cost is rows * dim; intended for dim <= ~16
// with row counts up to the tens of thousands.
LpResult lp_maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                     const Eigen::VectorXd& b);

struct ChebyshevResult {
  bool feasible = false;   // false iff {x : Ax <= b} is empty
  Eigen::VectorXd center;  // valid when feasible; max-slack interior witness
  double radius = 0.0;     // largest inscribed ball radius (capped, see .cpp)
};

// Chebyshev center of {x : A x <= b}. Rows need not be normalized. The radius
// variable is capped internally so unbounded sets still produce a finite
// witness point instead of an unbounded LP.
ChebyshevResult chebyshev_center(const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& b);

}  // namespace rctl
