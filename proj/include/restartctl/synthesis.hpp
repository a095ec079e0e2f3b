// synthesis.hpp — safety controller synthesis on the abstraction: maximal
// controlled invariant inside the safe set, refined into a per-cell table of
// admissible inputs, with an inter-sample margin that accounts for where the
// continuous trajectory wanders between the checked time points.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "restartctl/abstraction.hpp"

namespace rctl {

// Safe set shrunk by a uniform margin: rows are unit-normalized, offsets
// reduced by delta.
HPolytope shrink_polytope(const HPolytope& S, double delta);

// Worst-case excursion of the continuous tube beyond the supports of the
// boxes checked by the abstraction (the start cell and the reach boxes at
// tau_c and tau_c + tau_r), measured along the unit-normalized rows of S.
// Scans cells whose box lies inside S, every input; max_pairs > 0 subsamples
// pairs with a deterministic stride (estimate instead of a bound).
double shrink_margin(const ControlSystem& sys, const SymbolicGrid& grid,
                     const std::vector<Eigen::VectorXd>& inputs,
                     const HPolytope& S, double tau_c, double tau_r, double h,
                     std::uint64_t max_pairs = 0);

// Per-cell flags: cell box contained in the given polytope.
std::vector<std::uint8_t> abstract_safe_set(const AbstractSystem& abs,
                                            const HPolytope& region);

struct SafetyResult {
  std::vector<std::uint8_t> invariant;  // per cell: in the maximal fixed point
  std::uint32_t safe_count = 0;         // cells that passed the safe-set test
  std::uint32_t invariant_count = 0;
  std::vector<std::uint32_t> first_removed;  // up to 32, in removal order
};

// Maximal set Z inside the safe cells such that every cell of Z has a
// non-blocked input whose targets all stay in Z. Worklist peeling over a
// predecessor index; linear in the transition table.
SafetyResult solve_safety(const AbstractSystem& abs,
                          const std::vector<std::uint8_t>& safe);

struct RefinedController {
  std::string plant;
  SymbolicGrid grid;
  std::vector<Eigen::VectorXd> inputs;
  double tau_c = 0.0;
  double tau_r = 0.0;
  double step_h = 0.0;
  double margin = 0.0;
  std::uint64_t config_hash = 0;         // provenance of the producing run
  std::vector<std::uint8_t> domain;      // per cell
  std::vector<std::uint8_t> admissible;  // per pair, cell * n_inputs + j

  bool in_domain(std::uint32_t cell) const { return domain[cell] != 0; }
  bool pair_admissible(std::uint32_t cell, std::size_t j) const {
    return admissible[std::size_t(cell) * inputs.size() + j] != 0;
  }
  // Smallest admissible input index, or nullopt outside the domain.
  std::optional<std::size_t> choose_input(std::uint32_t cell) const;
  std::uint32_t domain_size() const;
};

// Keep, for every invariant cell, the inputs whose targets all stay in the
// invariant set.
RefinedController refine(const AbstractSystem& abs,
                         const std::vector<std::uint8_t>& invariant,
                         double margin, const std::string& plant_name);

void save_controller(const std::string& path, const RefinedController& ctl);
RefinedController load_controller(const std::string& path);

// One line per domain cell: id, center coordinates, chosen input index.
void export_domain_csv(const std::string& path, const RefinedController& ctl);

}  // namespace rctl
