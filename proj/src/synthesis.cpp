#include "restartctl/synthesis.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <stdexcept>

namespace rctl {

HPolytope shrink_polytope(const HPolytope& S, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("shrink: negative margin");
  HPolytope c = canonicalized(S);
  c.b.array() -= delta;
  return c;
}

double shrink_margin(const ControlSystem& sys, const SymbolicGrid& grid,
                     const std::vector<Eigen::VectorXd>& inputs,
                     const HPolytope& S, double tau_c, double tau_r, double h,
                     std::uint64_t max_pairs) {
  const HPolytope cs = canonicalized(S);
  const std::uint32_t n_cells = grid.cell_count();
  const std::size_t nu = inputs.size();
  if (nu == 0) throw std::invalid_argument("shrink_margin: no inputs");

  std::vector<std::uint32_t> candidates;
  candidates.reserve(n_cells);
  for (std::uint32_t c = 0; c < n_cells; ++c)
    if (box_in_polytope(grid.cell_box(c), cs)) candidates.push_back(c);

  const std::uint64_t n_pairs = std::uint64_t(candidates.size()) * nu;
  const std::uint64_t stride =
      max_pairs > 0 ? std::max<std::uint64_t>(1, n_pairs / max_pairs) : 1;

  // Support value of a box along one unit row.
  const auto support = [](const Eigen::VectorXd& a, const HyperInterval& box) {
    return a.dot(box.center()) + a.cwiseAbs().dot(box.half_width());
  };

  double delta = 0.0;
  const int n_seg = 10;
  for (std::uint64_t p = 0; p < n_pairs; p += stride) {
    const std::uint32_t cell = candidates[std::size_t(p / nu)];
    const std::size_t j = std::size_t(p % nu);
    const HyperInterval box = grid.cell_box(cell);

    const ReachTube t1 = reach_tube(sys, box, inputs[j], tau_c, n_seg, h);
    if (t1.overflow) continue;
    const ReachTube t2 =
        reach_tube(sys, t1.at.back(), inputs[j], tau_r, n_seg, h);
    if (t2.overflow) continue;

    const HyperInterval anchors[3] = {box, t1.at.back(), t2.at.back()};
    for (Eigen::Index r = 0; r < cs.rows(); ++r) {
      const Eigen::VectorXd a = cs.A.row(r).transpose();
      double anchor_sup = support(a, anchors[0]);
      anchor_sup = std::max(anchor_sup, support(a, anchors[1]));
      anchor_sup = std::max(anchor_sup, support(a, anchors[2]));
      double tube_sup = anchor_sup;
      for (const auto& seg : t1.segments)
        tube_sup = std::max(tube_sup, support(a, seg));
      for (const auto& seg : t2.segments)
        tube_sup = std::max(tube_sup, support(a, seg));
      delta = std::max(delta, tube_sup - anchor_sup);
    }
  }
  return delta;
}

std::vector<std::uint8_t> abstract_safe_set(const AbstractSystem& abs,
                                            const HPolytope& region) {
  const std::uint32_t n_cells = abs.grid.cell_count();
  std::vector<std::uint8_t> safe(n_cells, 0);
  for (std::uint32_t c = 0; c < n_cells; ++c)
    safe[c] = box_in_polytope(abs.grid.cell_box(c), region) ? 1 : 0;
  return safe;
}

SafetyResult solve_safety(const AbstractSystem& abs,
                          const std::vector<std::uint8_t>& safe) {
  const std::uint32_t n_cells = abs.grid.cell_count();
  if (safe.size() != n_cells)
    throw std::invalid_argument("solve_safety: mask size mismatch");
  const std::size_t nu = abs.inputs.size();
  const std::size_t n_pairs = abs.pair_count();

  SafetyResult res;
  res.invariant = safe;
  for (std::uint32_t c = 0; c < n_cells; ++c)
    if (safe[c]) ++res.safe_count;

  // Predecessor index in CSR form: for each target cell, the pairs that can
  // reach it.
  std::vector<std::uint64_t> pred_off(n_cells + 1, 0);
  for (std::uint32_t t : abs.targets) ++pred_off[t + 1];
  for (std::uint32_t c = 0; c < n_cells; ++c) pred_off[c + 1] += pred_off[c];
  std::vector<std::uint64_t> pred(abs.targets.size());
  {
    std::vector<std::uint64_t> cursor(pred_off.begin(), pred_off.end() - 1);
    for (std::size_t p = 0; p < n_pairs; ++p)
      for (std::uint64_t i = abs.offsets[p]; i < abs.offsets[p + 1]; ++i)
        pred[cursor[abs.targets[i]]++] = p;
  }

  constexpr std::uint32_t kDead = UINT32_MAX;
  // pending[p]: number of this pair's targets currently outside Z, or kDead
  // for pairs that can never be used.
  std::vector<std::uint32_t> pending(n_pairs, 0);
  std::vector<std::uint32_t> usable(n_cells, 0);
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const auto cell = std::uint32_t(p / nu);
    if (!res.invariant[cell] || abs.blocked[p]) {
      pending[p] = kDead;
      continue;
    }
    std::uint32_t outside = 0;
    for (std::uint64_t i = abs.offsets[p]; i < abs.offsets[p + 1]; ++i)
      if (!res.invariant[abs.targets[i]]) ++outside;
    pending[p] = outside;
    if (outside == 0) ++usable[cell];
  }

  std::deque<std::uint32_t> queue;
  for (std::uint32_t c = 0; c < n_cells; ++c)
    if (res.invariant[c] && usable[c] == 0) queue.push_back(c);

  while (!queue.empty()) {
    const std::uint32_t c = queue.front();
    queue.pop_front();
    if (!res.invariant[c]) continue;
    res.invariant[c] = 0;
    if (res.first_removed.size() < 32) res.first_removed.push_back(c);
    for (std::uint64_t i = pred_off[c]; i < pred_off[c + 1]; ++i) {
      const std::uint64_t p = pred[i];
      if (pending[p] == kDead) continue;
      if (pending[p]++ == 0) {
        const auto src = std::uint32_t(p / nu);
        if (res.invariant[src] && --usable[src] == 0) queue.push_back(src);
      }
    }
  }

  for (std::uint32_t c = 0; c < n_cells; ++c)
    if (res.invariant[c]) ++res.invariant_count;
  return res;
}

std::optional<std::size_t> RefinedController::choose_input(
    std::uint32_t cell) const {
  if (!in_domain(cell)) return std::nullopt;
  const std::size_t base = std::size_t(cell) * inputs.size();
  for (std::size_t j = 0; j < inputs.size(); ++j)
    if (admissible[base + j]) return j;
  return std::nullopt;
}

std::uint32_t RefinedController::domain_size() const {
  std::uint32_t n = 0;
  for (std::uint8_t d : domain) n += d;
  return n;
}

RefinedController refine(const AbstractSystem& abs,
                         const std::vector<std::uint8_t>& invariant,
                         double margin, const std::string& plant_name) {
  const std::uint32_t n_cells = abs.grid.cell_count();
  if (invariant.size() != n_cells)
    throw std::invalid_argument("refine: mask size mismatch");
  const std::size_t nu = abs.inputs.size();

  RefinedController ctl;
  ctl.plant = plant_name;
  ctl.grid = abs.grid;
  ctl.inputs = abs.inputs;
  ctl.tau_c = abs.tau_c;
  ctl.tau_r = abs.tau_r;
  ctl.step_h = abs.step_h;
  ctl.margin = margin;
  ctl.domain = invariant;
  ctl.admissible.assign(abs.pair_count(), 0);

  for (std::uint32_t cell = 0; cell < n_cells; ++cell) {
    if (!invariant[cell]) continue;
    bool any = false;
    for (std::size_t j = 0; j < nu; ++j) {
      const std::size_t p = abs.pair_index(cell, j);
      if (abs.blocked[p]) continue;
      bool ok = true;
      for (std::uint64_t i = abs.offsets[p]; ok && i < abs.offsets[p + 1]; ++i)
        ok = invariant[abs.targets[i]] != 0;
      if (ok) {
        ctl.admissible[p] = 1;
        any = true;
      }
    }
    if (!any)
      throw std::logic_error("refine: invariant cell without admissible input");
  }
  return ctl;
}

namespace {

constexpr char kCtlMagic[8] = {'R', 'C', 'T', 'L', 'C', 'T', 'L', '1'};

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& f) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) throw std::runtime_error("controller file: truncated");
  return v;
}

}  // namespace

void save_controller(const std::string& path, const RefinedController& ctl) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(kCtlMagic, sizeof kCtlMagic);

  put(f, std::uint32_t(ctl.plant.size()));
  f.write(ctl.plant.data(), std::streamsize(ctl.plant.size()));

  const auto nx = std::uint32_t(ctl.grid.dim());
  put(f, nx);
  for (int i = 0; i < ctl.grid.dim(); ++i) put(f, ctl.grid.eta(i));
  for (int i = 0; i < ctl.grid.dim(); ++i)
    put(f, std::int64_t(ctl.grid.k_min(i)));
  for (int i = 0; i < ctl.grid.dim(); ++i)
    put(f, std::int64_t(ctl.grid.k_max(i)));

  put(f, std::uint64_t(ctl.inputs.size()));
  put(f, std::uint32_t(ctl.inputs.empty() ? 0 : ctl.inputs[0].size()));
  for (const auto& u : ctl.inputs)
    for (Eigen::Index j = 0; j < u.size(); ++j) put(f, u(j));

  put(f, ctl.tau_c);
  put(f, ctl.tau_r);
  put(f, ctl.step_h);
  put(f, ctl.margin);
  put(f, ctl.config_hash);

  put(f, std::uint64_t(ctl.domain.size()));
  f.write(reinterpret_cast<const char*>(ctl.domain.data()),
          std::streamsize(ctl.domain.size()));
  put(f, std::uint64_t(ctl.admissible.size()));
  f.write(reinterpret_cast<const char*>(ctl.admissible.data()),
          std::streamsize(ctl.admissible.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

RefinedController load_controller(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  char magic[8];
  f.read(magic, sizeof magic);
  if (!f || !std::equal(magic, magic + 8, kCtlMagic))
    throw std::runtime_error("not a controller file: " + path);

  RefinedController ctl;
  const auto name_len = get<std::uint32_t>(f);
  if (name_len > 4096)
    throw std::runtime_error("controller file: bad name length");
  ctl.plant.resize(name_len);
  f.read(ctl.plant.data(), name_len);
  if (!f) throw std::runtime_error("controller file: truncated");

  const auto nx = get<std::uint32_t>(f);
  if (nx == 0 || nx > 64)
    throw std::runtime_error("controller file: bad dimension");
  Eigen::VectorXd eta(nx);
  Eigen::VectorXi k_min(nx), k_max(nx);
  const auto get_index = [&f]() {
    const auto v = get<std::int64_t>(f);
    if (v < INT32_MIN || v > INT32_MAX)
      throw std::runtime_error("controller file: lattice index overflow");
    return int(v);
  };
  for (std::uint32_t i = 0; i < nx; ++i) eta(i) = get<double>(f);
  for (std::uint32_t i = 0; i < nx; ++i) k_min(i) = get_index();
  for (std::uint32_t i = 0; i < nx; ++i) k_max(i) = get_index();
  ctl.grid = SymbolicGrid::from_layout(eta, k_min, k_max);

  const auto n_inputs = get<std::uint64_t>(f);
  const auto mu = get<std::uint32_t>(f);
  if (n_inputs == 0 || n_inputs > (1u << 24) || mu == 0 || mu > 64)
    throw std::runtime_error("controller file: bad input table");
  ctl.inputs.resize(n_inputs, Eigen::VectorXd(mu));
  for (auto& u : ctl.inputs)
    for (std::uint32_t j = 0; j < mu; ++j) u(j) = get<double>(f);

  ctl.tau_c = get<double>(f);
  ctl.tau_r = get<double>(f);
  ctl.step_h = get<double>(f);
  ctl.margin = get<double>(f);
  ctl.config_hash = get<std::uint64_t>(f);

  const auto n_cells = get<std::uint64_t>(f);
  if (n_cells != ctl.grid.cell_count())
    throw std::runtime_error("controller file: domain size mismatch");
  ctl.domain.resize(n_cells);
  f.read(reinterpret_cast<char*>(ctl.domain.data()),
         std::streamsize(n_cells));
  const auto n_pairs = get<std::uint64_t>(f);
  if (n_pairs != n_cells * n_inputs)
    throw std::runtime_error("controller file: pair count mismatch");
  ctl.admissible.resize(n_pairs);
  f.read(reinterpret_cast<char*>(ctl.admissible.data()),
         std::streamsize(n_pairs));
  if (!f) throw std::runtime_error("controller file: truncated");
  return ctl;
}

void export_domain_csv(const std::string& path, const RefinedController& ctl) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "cell";
  for (int i = 0; i < ctl.grid.dim(); ++i) f << ",x" << i;
  f << ",input\n";
  char buf[64];
  for (std::uint32_t c = 0; c < ctl.grid.cell_count(); ++c) {
    if (!ctl.in_domain(c)) continue;
    const Eigen::VectorXd center = ctl.grid.center(c);
    f << c;
    for (Eigen::Index i = 0; i < center.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.12g", center(i));
      f << buf;
    }
    f << ',' << *ctl.choose_input(c) << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace rctl
