// grid.cpp — lattice arithmetic for the symbolic grid. Linear ids run with
// dimension 0 fastest; the id one past the interior range is the overflow
// symbol.

#include "restartctl/grid.hpp"

#include <cmath>

namespace rctl {

using Eigen::VectorXd;
using Eigen::VectorXi;

SymbolicGrid SymbolicGrid::create(const HyperInterval& bounds, const VectorXd& eta) {
  const int n = bounds.dim();
  if (eta.size() != n)
    throw std::invalid_argument("SymbolicGrid: eta dimension mismatch");
  if (eta.minCoeff() <= 0.0)
    throw std::invalid_argument("SymbolicGrid: eta must be positive");

  SymbolicGrid g;
  g.eta = eta;
  g.k_min.resize(n);
  g.k_max.resize(n);
  for (int i = 0; i < n; ++i) {
    // Cell k covers [k eta - eta/2, k eta + eta/2]; keep cells inside bounds.
    g.k_min(i) = int(std::ceil((bounds.lower(i) + 0.5 * eta(i)) / eta(i) - 1e-9));
    g.k_max(i) = int(std::floor((bounds.upper(i) - 0.5 * eta(i)) / eta(i) + 1e-9));
    if (g.k_max(i) < g.k_min(i))
      throw std::invalid_argument("SymbolicGrid: no cell fits in dimension " +
                                  std::to_string(i));
  }

  double total = 1.0;
  for (int i = 0; i < n; ++i)
    total *= double(g.k_max(i) - g.k_min(i) + 1);
  if (total > double(UINT32_MAX))
    throw std::invalid_argument("SymbolicGrid: more than 2^32 - 1 cells");
  return g;
}

SymbolicGrid SymbolicGrid::from_layout(const VectorXd& eta,
                                       const VectorXi& k_min,
                                       const VectorXi& k_max) {
  const Eigen::Index n = eta.size();
  if (k_min.size() != n || k_max.size() != n)
    throw std::invalid_argument("SymbolicGrid: layout dimension mismatch");
  if (n == 0 || eta.minCoeff() <= 0.0 || !eta.allFinite())
    throw std::invalid_argument("SymbolicGrid: bad cell widths");
  double total = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (k_max(i) < k_min(i))
      throw std::invalid_argument("SymbolicGrid: empty layout dimension");
    total *= double(k_max(i) - k_min(i) + 1);
  }
  if (total > double(UINT32_MAX))
    throw std::invalid_argument("SymbolicGrid: more than 2^32 - 1 cells");
  SymbolicGrid g;
  g.eta = eta;
  g.k_min = k_min;
  g.k_max = k_max;
  return g;
}

std::uint32_t SymbolicGrid::cell_count() const {
  std::uint64_t total = 1;
  for (int i = 0; i < dim(); ++i)
    total *= std::uint64_t(k_max(i) - k_min(i) + 1);
  return std::uint32_t(total);
}

std::optional<std::uint32_t> SymbolicGrid::quantize(const VectorXd& x) const {
  if (x.size() != dim())
    throw std::invalid_argument("SymbolicGrid::quantize: dimension mismatch");
  std::uint64_t id = 0;
  std::uint64_t stride = 1;
  for (int i = 0; i < dim(); ++i) {
    // Nearest lattice point; an exact half tie rounds down (smaller index).
    const long k = long(std::ceil(x(i) / eta(i) - 0.5));
    if (k < k_min(i) || k > k_max(i)) return std::nullopt;
    id += stride * std::uint64_t(k - k_min(i));
    stride *= std::uint64_t(k_max(i) - k_min(i) + 1);
  }
  return std::uint32_t(id);
}

VectorXd SymbolicGrid::center(std::uint32_t id) const {
  if (id >= cell_count())
    throw std::invalid_argument("SymbolicGrid::center: bad cell id");
  VectorXd c(dim());
  std::uint64_t rest = id;
  for (int i = 0; i < dim(); ++i) {
    const std::uint64_t count = std::uint64_t(k_max(i) - k_min(i) + 1);
    const long k = k_min(i) + long(rest % count);
    rest /= count;
    c(i) = double(k) * eta(i);
  }
  return c;
}

HyperInterval SymbolicGrid::cell_box(std::uint32_t id) const {
  const VectorXd c = center(id);
  return HyperInterval(c - 0.5 * eta, c + 0.5 * eta);
}

HyperInterval SymbolicGrid::covered_region() const {
  VectorXd lo(dim()), hi(dim());
  for (int i = 0; i < dim(); ++i) {
    lo(i) = (double(k_min(i)) - 0.5) * eta(i);
    hi(i) = (double(k_max(i)) + 0.5) * eta(i);
  }
  return HyperInterval(std::move(lo), std::move(hi));
}

bool SymbolicGrid::cover(const HyperInterval& box,
                         std::vector<std::uint32_t>& out) const {
  if (box.dim() != dim())
    throw std::invalid_argument("SymbolicGrid::cover: dimension mismatch");
  if (!covered_region().contains(box)) return false;

  VectorXi lo(dim()), hi(dim());
  for (int i = 0; i < dim(); ++i) {
    // Cells whose closed box touches the closed query box.
    long klo = long(std::ceil((box.lower(i) - 0.5 * eta(i)) / eta(i) - 1e-9));
    long khi = long(std::floor((box.upper(i) + 0.5 * eta(i)) / eta(i) + 1e-9));
    klo = std::max<long>(klo, k_min(i));
    khi = std::min<long>(khi, k_max(i));
    if (khi < klo) return false;  // degenerate roundoff corner
    lo(i) = int(klo);
    hi(i) = int(khi);
  }

  out.clear();
  VectorXi k = lo;
  for (;;) {
    std::uint64_t id = 0;
    std::uint64_t stride = 1;
    for (int i = 0; i < dim(); ++i) {
      id += stride * std::uint64_t(k(i) - k_min(i));
      stride *= std::uint64_t(k_max(i) - k_min(i) + 1);
    }
    out.push_back(std::uint32_t(id));
    int d = 0;
    while (d < dim()) {
      if (++k(d) <= hi(d)) break;
      k(d) = lo(d);
      ++d;
    }
    if (d == dim()) break;
  }
  return true;
}

bool SymbolicGrid::same_layout(const SymbolicGrid& other) const {
  return dim() == other.dim() && (eta - other.eta).norm() == 0.0 &&
         (k_min - other.k_min).norm() == 0 && (k_max - other.k_max).norm() == 0;
}

}  // namespace rctl
