// abstraction.hpp — finite dual-horizon abstraction of a sampled control
// system over a symbolic grid. Each (cell, input) pair either is blocked or
// carries the set of cells overlapping the reach boxes at tau_c and at
// tau_r + tau_c; blocked means some reach box left the gridded region, so no
// guarantee can be given for that pair.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "restartctl/grid.hpp"
#include "restartctl/reach.hpp"

namespace rctl {

struct PostResult {
  bool blocked = false;
  std::vector<std::uint32_t> targets;  // sorted, unique; empty iff blocked
};

// Successors of one cell under one input.
PostResult compute_post(const ControlSystem& sys, const SymbolicGrid& grid,
                        std::uint32_t cell, const Eigen::VectorXd& u,
                        double tau_c, double tau_r, double h);

// Uniform input grid over the box U with counts(j) values per dimension
// (endpoints included; a count of 1 picks the midpoint). Dimension 0 varies
// fastest in the returned order.
std::vector<Eigen::VectorXd> input_grid(const HyperInterval& U,
                                        const Eigen::VectorXi& counts);

struct AbstractSystem {
  SymbolicGrid grid;
  std::vector<Eigen::VectorXd> inputs;
  double tau_c = 0.0;
  double tau_r = 0.0;
  double step_h = 0.0;

  // Flattened transition table: pair (cell, j) owns
  // targets[offsets[pair] .. offsets[pair + 1]) with pair = cell * nu + j.
  std::vector<std::uint64_t> offsets;
  std::vector<std::uint32_t> targets;
  std::vector<std::uint8_t> blocked;

  std::size_t pair_count() const { return blocked.size(); }
  std::size_t pair_index(std::uint32_t cell, std::size_t j) const {
    return std::size_t(cell) * inputs.size() + j;
  }
  bool pair_blocked(std::uint32_t cell, std::size_t j) const {
    return blocked[pair_index(cell, j)] != 0;
  }
  // Targets of a pair as [begin, end) into targets.
  std::pair<const std::uint32_t*, const std::uint32_t*> pair_targets(
      std::uint32_t cell, std::size_t j) const;
};

// OpenMP-parallel construction (one task per cell). The output is identical
// to the serial reference for any schedule: cells are computed into private
// slots and merged in index order.
AbstractSystem build_abstraction(const ControlSystem& sys,
                                 const SymbolicGrid& grid,
                                 const std::vector<Eigen::VectorXd>& inputs,
                                 double tau_c, double tau_r, double h);

// Straight-line serial reference used by the equivalence test and the
// benchmark baseline.
AbstractSystem build_abstraction_serial(const ControlSystem& sys,
                                        const SymbolicGrid& grid,
                                        const std::vector<Eigen::VectorXd>& inputs,
                                        double tau_c, double tau_r, double h);

bool same_abstraction(const AbstractSystem& a, const AbstractSystem& b);

// Sample-based soundness audit: draws states inside non-blocked cells,
// simulates both horizons, and checks the quantized successors against the
// abstract transition table.
struct RefinementReport {
  std::uint64_t samples = 0;
  std::uint64_t violations = 0;
  std::vector<std::string> examples;  // first few violations, for diagnostics
};
RefinementReport check_refinement(const ControlSystem& sys,
                                  const AbstractSystem& abs,
                                  std::uint64_t n_samples, std::uint64_t seed);

// Binary serialization (native byte order; not an interchange format).
void save_abstraction(const std::string& path, const AbstractSystem& abs);
AbstractSystem load_abstraction(const std::string& path);

// Human-readable dump for small instances (refuses > 100k pairs).
void export_abstraction_text(const std::string& path, const AbstractSystem& abs);

}  // namespace rctl
