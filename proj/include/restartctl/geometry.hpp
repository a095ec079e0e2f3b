// geometry.hpp — half-space polytopes, hyper-intervals, ellipsoid membership,
// and the LP-backed set operations shared by synthesis and runtime code.

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace rctl {

// Absolute tolerance for membership and inclusion tests on unit-normalized
// rows. Everything geometric in the toolkit routes through this one slack.
inline constexpr double kGeomTol = 1e-9;

struct HyperInterval {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  HyperInterval() = default;
  HyperInterval(Eigen::VectorXd lo, Eigen::VectorXd hi);

  int dim() const { return int(lower.size()); }
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd half_width() const { return 0.5 * (upper - lower); }

  bool contains(const Eigen::VectorXd& x, double tol = kGeomTol) const;
  bool contains(const HyperInterval& inner, double tol = kGeomTol) const;
  bool intersects(const HyperInterval& other, double tol = kGeomTol) const;

  HyperInterval widened(const Eigen::VectorXd& delta) const;
  static HyperInterval hull(const HyperInterval& a, const HyperInterval& b);

  // All 2^dim corner points; guarded to dim <= 20.
  std::vector<Eigen::VectorXd> vertices() const;
};

// Convex polytope in half-space form {x : A x <= b}.
struct HPolytope {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  HPolytope() = default;
  HPolytope(Eigen::MatrixXd a, Eigen::VectorXd rhs);

  int dim() const { return int(A.cols()); }
  int rows() const { return int(A.rows()); }

  static HPolytope from_box(const HyperInterval& box);
  // Canonical empty polytope in R^dim (x1 <= -1 and x1 >= 1); used where an
  // all-zero contradictory row would violate the no-zero-rows convention.
  static HPolytope empty(int dim);
};

// Ellipsoid {x : |L (x - y)|_2 <= 1}; membership is the only operation.
struct Ellipsoid {
  Eigen::MatrixXd L;
  Eigen::VectorXd y;
  bool contains(const Eigen::VectorXd& x, double tol = kGeomTol) const;
};

// Thrown when Fourier-Motzkin elimination exceeds its row budget, with the
// offending counts in the message.
struct ProjectionError : std::runtime_error {
  explicit ProjectionError(const std::string& what) : std::runtime_error(what) {}
};

// Unit-normalizes rows, drops trivially true rows, deduplicates parallel rows
// (keeping the tightest offset), and collapses a detected contradiction to the
// canonical empty polytope. The feasible set is unchanged.
HPolytope canonicalized(const HPolytope& p);

bool contains_point(const HPolytope& p, const Eigen::VectorXd& x,
                    double tol = kGeomTol);

// True iff {x : Ax <= b} is empty (one Chebyshev LP).
bool is_empty(const HPolytope& p);

// True iff p is contained in q: one support LP per row of q. An unbounded
// support value yields false unless p itself is empty (vacuously true).
bool is_subset(const HPolytope& p, const HPolytope& q, double tol = kGeomTol);

// Maximum of dir.x over p. Requires p non-empty and the value finite; throws
// LpError otherwise.
double support_value(const HPolytope& p, const Eigen::VectorXd& dir);

// Irredundant representation of a non-empty polytope. Output and input are
// mutually inclusive; rows come back canonicalized.
HPolytope remove_redundant(const HPolytope& p);

// Projects p in R^(n_keep + k) onto its first n_keep coordinates by
// Fourier-Motzkin elimination of the trailing k variables, with redundancy
// removal after each eliminated variable. row_cap bounds the intermediate
// row count; overflow raises ProjectionError.
HPolytope project_to_states(const HPolytope& p, int n_keep,
                            std::size_t row_cap = 200000);

// Exact test that every point of the box satisfies every row of p (support
// function of the box; no vertex enumeration).
bool box_in_polytope(const HyperInterval& box, const HPolytope& p,
                     double tol = kGeomTol);

// Plain-text serialization: a two-line comment header followed by one
// inequality per line, row-major coefficients then the offset.
// Optional comment becomes an extra "# ..." header line (e.g. provenance).
void save_polytope(const std::string& path, const HPolytope& p,
                   const std::string& comment = "");
HPolytope load_polytope(const std::string& path);

}  // namespace rctl
