#include "restartctl/abstraction.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "restartctl/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rctl {

PostResult compute_post(const ControlSystem& sys, const SymbolicGrid& grid,
                        std::uint32_t cell, const Eigen::VectorXd& u,
                        double tau_c, double tau_r, double h) {
  PostResult out;
  const HyperInterval box = grid.cell_box(cell);
  DualReach dr = reach_dual(sys, box, u, tau_c, tau_r + tau_c, h);
  if (dr.overflow) {
    out.blocked = true;
    return out;
  }
  std::vector<std::uint32_t> at_short, at_long;
  if (!grid.cover(dr.at_short, at_short) || !grid.cover(dr.at_long, at_long)) {
    out.blocked = true;
    return out;
  }
  out.targets.reserve(at_short.size() + at_long.size());
  std::set_union(at_short.begin(), at_short.end(), at_long.begin(),
                 at_long.end(), std::back_inserter(out.targets));
  return out;
}

std::vector<Eigen::VectorXd> input_grid(const HyperInterval& U,
                                        const Eigen::VectorXi& counts) {
  const Eigen::Index m = U.dim();
  if (counts.size() != m) throw std::invalid_argument("input_grid: count size");
  for (Eigen::Index j = 0; j < m; ++j)
    if (counts(j) < 1) throw std::invalid_argument("input_grid: count < 1");

  std::size_t total = 1;
  for (Eigen::Index j = 0; j < m; ++j) total *= std::size_t(counts(j));

  std::vector<Eigen::VectorXd> out;
  out.reserve(total);
  Eigen::VectorXi idx = Eigen::VectorXi::Zero(m);
  Eigen::VectorXd u(m);
  for (std::size_t n = 0; n < total; ++n) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double lo = U.lower(j), hi = U.upper(j);
      u(j) = counts(j) == 1
                 ? 0.5 * (lo + hi)
                 : lo + (hi - lo) * double(idx(j)) / double(counts(j) - 1);
    }
    out.push_back(u);
    for (Eigen::Index j = 0; j < m; ++j) {
      if (++idx(j) < counts(j)) break;
      idx(j) = 0;
    }
  }
  return out;
}

std::pair<const std::uint32_t*, const std::uint32_t*>
AbstractSystem::pair_targets(std::uint32_t cell, std::size_t j) const {
  const std::size_t p = pair_index(cell, j);
  const std::uint32_t* base = targets.data();
  return {base + offsets[p], base + offsets[p + 1]};
}

namespace {

void validate_build_args(const ControlSystem& sys, const SymbolicGrid& grid,
                         const std::vector<Eigen::VectorXd>& inputs,
                         double tau_c, double tau_r, double h) {
  if (grid.dim() != sys.state_dim)
    throw std::invalid_argument("abstraction: grid/state dimension mismatch");
  if (inputs.empty()) throw std::invalid_argument("abstraction: no inputs");
  for (const auto& u : inputs)
    if (u.size() != sys.input_dim)
      throw std::invalid_argument("abstraction: input dimension mismatch");
  if (!(tau_c > 0.0) || !(tau_r >= 0.0) || !(h > 0.0))
    throw std::invalid_argument("abstraction: bad time parameters");
}

AbstractSystem flatten(const SymbolicGrid& grid,
                       const std::vector<Eigen::VectorXd>& inputs,
                       double tau_c, double tau_r, double h,
                       const std::vector<std::vector<PostResult>>& slots) {
  AbstractSystem abs;
  abs.grid = grid;
  abs.inputs = inputs;
  abs.tau_c = tau_c;
  abs.tau_r = tau_r;
  abs.step_h = h;

  const std::size_t n_pairs = slots.size() * inputs.size();
  abs.offsets.reserve(n_pairs + 1);
  abs.blocked.reserve(n_pairs);
  std::uint64_t total = 0;
  for (const auto& row : slots)
    for (const auto& post : row) total += post.targets.size();
  abs.targets.reserve(total);

  abs.offsets.push_back(0);
  for (const auto& row : slots) {
    for (const auto& post : row) {
      abs.blocked.push_back(post.blocked ? 1 : 0);
      abs.targets.insert(abs.targets.end(), post.targets.begin(),
                         post.targets.end());
      abs.offsets.push_back(abs.targets.size());
    }
  }
  return abs;
}

}  // namespace

AbstractSystem build_abstraction(const ControlSystem& sys,
                                 const SymbolicGrid& grid,
                                 const std::vector<Eigen::VectorXd>& inputs,
                                 double tau_c, double tau_r, double h) {
  validate_build_args(sys, grid, inputs, tau_c, tau_r, h);
  const std::uint32_t n_cells = grid.cell_count();
  const std::size_t nu = inputs.size();

  std::vector<std::vector<PostResult>> slots(n_cells);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8)
#endif
  for (std::int64_t cell = 0; cell < std::int64_t(n_cells); ++cell) {
    auto& row = slots[std::size_t(cell)];
    row.resize(nu);
    for (std::size_t j = 0; j < nu; ++j)
      row[j] = compute_post(sys, grid, std::uint32_t(cell), inputs[j], tau_c,
                            tau_r, h);
  }

  return flatten(grid, inputs, tau_c, tau_r, h, slots);
}

AbstractSystem build_abstraction_serial(
    const ControlSystem& sys, const SymbolicGrid& grid,
    const std::vector<Eigen::VectorXd>& inputs, double tau_c, double tau_r,
    double h) {
  validate_build_args(sys, grid, inputs, tau_c, tau_r, h);
  const std::uint32_t n_cells = grid.cell_count();
  const std::size_t nu = inputs.size();

  std::vector<std::vector<PostResult>> slots(n_cells);
  for (std::uint32_t cell = 0; cell < n_cells; ++cell) {
    auto& row = slots[cell];
    row.resize(nu);
    for (std::size_t j = 0; j < nu; ++j)
      row[j] = compute_post(sys, grid, cell, inputs[j], tau_c, tau_r, h);
  }

  return flatten(grid, inputs, tau_c, tau_r, h, slots);
}

bool same_abstraction(const AbstractSystem& a, const AbstractSystem& b) {
  if (!a.grid.same_layout(b.grid)) return false;
  if (a.inputs.size() != b.inputs.size()) return false;
  for (std::size_t j = 0; j < a.inputs.size(); ++j)
    if (a.inputs[j] != b.inputs[j]) return false;
  return a.tau_c == b.tau_c && a.tau_r == b.tau_r && a.step_h == b.step_h &&
         a.offsets == b.offsets && a.targets == b.targets &&
         a.blocked == b.blocked;
}

RefinementReport check_refinement(const ControlSystem& sys,
                                  const AbstractSystem& abs,
                                  std::uint64_t n_samples,
                                  std::uint64_t seed) {
  RefinementReport rep;
  DetRng rng(seed);
  const std::uint32_t n_cells = abs.grid.cell_count();
  const std::size_t nu = abs.inputs.size();
  const Eigen::Index nx = abs.grid.dim();

  auto record = [&rep](std::uint32_t cell, std::size_t j,
                       const Eigen::VectorXd& x, const char* horizon) {
    ++rep.violations;
    if (rep.examples.size() >= 32) return;
    char buf[256];
    int off = std::snprintf(buf, sizeof buf, "cell=%" PRIu32 " j=%zu %s x=(",
                            cell, j, horizon);
    for (Eigen::Index i = 0; i < x.size() && off < int(sizeof buf) - 24; ++i)
      off += std::snprintf(buf + off, sizeof buf - off, "%s%.12g",
                           i ? ", " : "", x(i));
    std::snprintf(buf + off, sizeof buf - off, ")");
    rep.examples.emplace_back(buf);
  };

  std::uint64_t done = 0;
  std::uint64_t attempts = 0;
  const std::uint64_t attempt_cap = n_samples * 64 + 1024;
  Eigen::VectorXd x(nx);
  while (done < n_samples && attempts < attempt_cap) {
    ++attempts;
    const auto cell = std::uint32_t(rng.below(n_cells));
    const std::size_t j = std::size_t(rng.below(nu));
    if (abs.pair_blocked(cell, j)) continue;

    const HyperInterval box = abs.grid.cell_box(cell);
    for (Eigen::Index i = 0; i < nx; ++i)
      x(i) = rng.uniform(box.lower(i), box.upper(i));

    const Eigen::VectorXd& u = abs.inputs[j];
    const Eigen::VectorXd x_short = integrate(sys, x, u, abs.tau_c, abs.step_h);
    const Eigen::VectorXd x_long =
        integrate(sys, x, u, abs.tau_c + abs.tau_r, abs.step_h);
    ++done;

    auto [lo, hi] = abs.pair_targets(cell, j);
    const auto in_targets = [&](const Eigen::VectorXd& y, const char* tag) {
      const auto q = abs.grid.quantize(y);
      if (!q || !std::binary_search(lo, hi, *q)) record(cell, j, y, tag);
    };
    in_targets(x_short, "short");
    in_targets(x_long, "long");
  }
  rep.samples = done;
  return rep;
}

namespace {

constexpr char kAbsMagic[8] = {'R', 'C', 'T', 'L', 'A', 'B', 'S', '1'};

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& f) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw std::runtime_error("abstraction file: truncated");
  return v;
}

}  // namespace

void save_abstraction(const std::string& path, const AbstractSystem& abs) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(kAbsMagic, sizeof kAbsMagic);

  const auto nx = std::uint32_t(abs.grid.dim());
  put(f, nx);
  for (Eigen::Index i = 0; i < abs.grid.dim(); ++i) put(f, abs.grid.eta(i));
  for (Eigen::Index i = 0; i < abs.grid.dim(); ++i)
    put(f, std::int64_t(abs.grid.k_min(i)));
  for (Eigen::Index i = 0; i < abs.grid.dim(); ++i)
    put(f, std::int64_t(abs.grid.k_max(i)));

  const auto n_inputs = std::uint64_t(abs.inputs.size());
  const auto mu = std::uint32_t(abs.inputs.empty() ? 0 : abs.inputs[0].size());
  put(f, n_inputs);
  put(f, mu);
  for (const auto& u : abs.inputs)
    for (Eigen::Index j = 0; j < u.size(); ++j) put(f, u(j));

  put(f, abs.tau_c);
  put(f, abs.tau_r);
  put(f, abs.step_h);

  put(f, std::uint64_t(abs.blocked.size()));
  for (std::uint64_t off : abs.offsets) put(f, off);
  put(f, std::uint64_t(abs.targets.size()));
  f.write(reinterpret_cast<const char*>(abs.targets.data()),
          std::streamsize(abs.targets.size() * sizeof(std::uint32_t)));
  f.write(reinterpret_cast<const char*>(abs.blocked.data()),
          std::streamsize(abs.blocked.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

AbstractSystem load_abstraction(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || !std::equal(magic, magic + 8, kAbsMagic))
    throw std::runtime_error("not an abstraction file: " + path);

  const auto nx = get<std::uint32_t>(f);
  if (nx == 0 || nx > 64)
    throw std::runtime_error("abstraction file: bad dimension");
  Eigen::VectorXd eta(nx);
  Eigen::VectorXi k_min(nx), k_max(nx);
  const auto get_index = [&f]() {
    const auto v = get<std::int64_t>(f);
    if (v < INT32_MIN || v > INT32_MAX)
      throw std::runtime_error("abstraction file: lattice index overflow");
    return int(v);
  };
  for (std::uint32_t i = 0; i < nx; ++i) eta(i) = get<double>(f);
  for (std::uint32_t i = 0; i < nx; ++i) k_min(i) = get_index();
  for (std::uint32_t i = 0; i < nx; ++i) k_max(i) = get_index();

  AbstractSystem abs;
  abs.grid = SymbolicGrid::from_layout(eta, k_min, k_max);

  const auto n_inputs = get<std::uint64_t>(f);
  const auto mu = get<std::uint32_t>(f);
  if (n_inputs == 0 || n_inputs > (1u << 24) || mu == 0 || mu > 64)
    throw std::runtime_error("abstraction file: bad input table");
  abs.inputs.resize(n_inputs, Eigen::VectorXd(mu));
  for (auto& u : abs.inputs)
    for (std::uint32_t j = 0; j < mu; ++j) u(j) = get<double>(f);

  abs.tau_c = get<double>(f);
  abs.tau_r = get<double>(f);
  abs.step_h = get<double>(f);

  const auto n_pairs = get<std::uint64_t>(f);
  if (n_pairs != std::uint64_t(abs.grid.cell_count()) * n_inputs)
    throw std::runtime_error("abstraction file: pair count mismatch");
  abs.offsets.resize(n_pairs + 1);
  for (auto& off : abs.offsets) off = get<std::uint64_t>(f);
  const auto n_targets = get<std::uint64_t>(f);
  if (abs.offsets.front() != 0 || abs.offsets.back() != n_targets)
    throw std::runtime_error("abstraction file: offset table corrupt");
  for (std::size_t p = 1; p < abs.offsets.size(); ++p)
    if (abs.offsets[p] < abs.offsets[p - 1])
      throw std::runtime_error("abstraction file: offset table corrupt");

  abs.targets.resize(n_targets);
  f.read(reinterpret_cast<char*>(abs.targets.data()),
         std::streamsize(n_targets * sizeof(std::uint32_t)));
  abs.blocked.resize(n_pairs);
  f.read(reinterpret_cast<char*>(abs.blocked.data()),
         std::streamsize(n_pairs));
  if (!f) throw std::runtime_error("abstraction file: truncated");

  const std::uint32_t n_cells = abs.grid.cell_count();
  for (std::uint32_t t : abs.targets)
    if (t >= n_cells)
      throw std::runtime_error("abstraction file: target out of range");
  return abs;
}

void export_abstraction_text(const std::string& path,
                             const AbstractSystem& abs) {
  if (abs.pair_count() > 100000)
    throw std::runtime_error("text export refused: more than 100k pairs");
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "# rctl-abstraction v1\n";
  f << "# cells=" << abs.grid.cell_count() << " inputs=" << abs.inputs.size()
    << " tau_c=" << abs.tau_c << " tau_r=" << abs.tau_r << "\n";
  const std::size_t nu = abs.inputs.size();
  for (std::uint32_t cell = 0; cell < abs.grid.cell_count(); ++cell) {
    for (std::size_t j = 0; j < nu; ++j) {
      f << cell << ' ' << j << " :";
      if (abs.pair_blocked(cell, j)) {
        f << " blocked";
      } else {
        auto [lo, hi] = abs.pair_targets(cell, j);
        for (const std::uint32_t* p = lo; p != hi; ++p) f << ' ' << *p;
      }
      f << '\n';
    }
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace rctl
