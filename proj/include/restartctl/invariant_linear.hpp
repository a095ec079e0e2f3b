// invariant_linear.hpp — polytopic one-shot-recoverable region for linear
// plants: iterate backward over "stay safe now, land back inside after one
// cycle and after a full restart hold", projecting the input away each step,
// until the region stops shrinking.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "restartctl/dynamics.hpp"
#include "restartctl/geometry.hpp"

namespace rctl {

enum class InvStatus { Success, Empty, BudgetExceeded };

const char* inv_status_name(InvStatus s);

struct InvResult {
  InvStatus status = InvStatus::BudgetExceeded;
  HPolytope region;  // meaningful for Success only
  int iterations = 0;
  std::vector<Eigen::Index> row_counts;  // rows of each iterate, diagnostics
};

struct InvOptions {
  int p_max = 64;           // iteration budget
  double subset_tol = 1e-7; // containment slack for the fixed-point test
  std::size_t row_cap = 200000;  // projection blow-up guard
};

// Maximal-style iteration: I(0) = S; I(p+1) = {x in S : exists u in U with
// Ad x + Bd u in I(p) and A_hold x + B_hold u in I(p)}. Stops when
// I(p) is contained in I(p+1) (Success), an iterate goes empty (Empty), or
// the budget runs out (BudgetExceeded).
InvResult compute_inv_region(const HPolytope& safe_x,
                             const HPolytope& input_poly,
                             const DiscreteLinear& d,
                             const HorizonMatrices& hold,
                             const InvOptions& opt = {});

// Runtime command selection: the Chebyshev center of the inputs that keep
// both the one-cycle and the held-through-restart successors of x inside the
// region. nullopt when no such input exists.
struct BcLinear {
  HPolytope region;
  HPolytope input_poly;
  DiscreteLinear d;
  HorizonMatrices hold;

  std::optional<Eigen::VectorXd> choose(const Eigen::VectorXd& x) const;
};

// Regions serialize with save_polytope / load_polytope; the scenario file
// names the plant and schedule they belong to.

}  // namespace rctl
