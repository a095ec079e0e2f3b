// grid.hpp — uniform quantization grid over a box. Cells are centered on the
// lattice eta * Z^n; only cells whose closed box lies inside the bounds are
// interior cells, and everything else maps to the single overflow symbol.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "restartctl/geometry.hpp"

namespace rctl {

struct SymbolicGrid {
  Eigen::VectorXd eta;
  Eigen::VectorXi k_min;  // inclusive lattice index range per dimension
  Eigen::VectorXi k_max;

  // Largest grid fully inside bounds with the given cell widths. Throws if
  // some dimension admits no cell.
  static SymbolicGrid create(const HyperInterval& bounds,
                             const Eigen::VectorXd& eta);

  // Rebuild from an explicit lattice layout (deserialization path).
  static SymbolicGrid from_layout(const Eigen::VectorXd& eta,
                                  const Eigen::VectorXi& k_min,
                                  const Eigen::VectorXi& k_max);

  int dim() const { return int(eta.size()); }
  std::uint32_t cell_count() const;
  // The overflow symbol: one id past the dense interior range.
  std::uint32_t overflow_id() const { return cell_count(); }

  // Nearest-cell quantization (ties toward the smaller index); nullopt for
  // points outside every interior cell.
  std::optional<std::uint32_t> quantize(const Eigen::VectorXd& x) const;

  Eigen::VectorXd center(std::uint32_t id) const;
  HyperInterval cell_box(std::uint32_t id) const;
  // Closed region covered by the interior cells.
  HyperInterval covered_region() const;

  // Ids of every interior cell whose closed box intersects the given box
  // (touching counts). Returns false, leaving out untouched, when the box is
  // not fully inside the covered region.
  bool cover(const HyperInterval& box, std::vector<std::uint32_t>& out) const;

  bool same_layout(const SymbolicGrid& other) const;
};

}  // namespace rctl
