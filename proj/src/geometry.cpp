// geometry.cpp — polytope operations. Redundancy removal follows Clarkson's
// output-sensitive scheme above a small row threshold: each candidate row is
// tested against the rows already known irredundant, and a violation witness
// is converted into a new irredundant row by shooting a ray from an interior
// point. Plain one-LP-per-row reduction handles the small and the degenerate
// (no interior point) cases.

#include "restartctl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "restartctl/linprog.hpp"

namespace rctl {

using Eigen::MatrixXd;
using Eigen::VectorXd;

HyperInterval::HyperInterval(VectorXd lo, VectorXd hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size())
    throw std::invalid_argument("HyperInterval: dimension mismatch");
  if (lower.size() > 0 && (upper - lower).minCoeff() < 0.0)
    throw std::invalid_argument("HyperInterval: upper < lower");
}

bool HyperInterval::contains(const VectorXd& x, double tol) const {
  if (x.size() != lower.size())
    throw std::invalid_argument("HyperInterval::contains: dimension mismatch");
  return (x - lower).minCoeff() >= -tol && (upper - x).minCoeff() >= -tol;
}

bool HyperInterval::contains(const HyperInterval& inner, double tol) const {
  return (inner.lower - lower).minCoeff() >= -tol &&
         (upper - inner.upper).minCoeff() >= -tol;
}

bool HyperInterval::intersects(const HyperInterval& other, double tol) const {
  for (int i = 0; i < dim(); ++i) {
    if (other.lower(i) > upper(i) + tol) return false;
    if (lower(i) > other.upper(i) + tol) return false;
  }
  return true;
}

HyperInterval HyperInterval::widened(const VectorXd& delta) const {
  return HyperInterval(lower - delta, upper + delta);
}

HyperInterval HyperInterval::hull(const HyperInterval& a, const HyperInterval& b) {
  return HyperInterval(a.lower.cwiseMin(b.lower), a.upper.cwiseMax(b.upper));
}

std::vector<VectorXd> HyperInterval::vertices() const {
  const int n = dim();
  if (n > 20) throw std::invalid_argument("HyperInterval::vertices: dim > 20");
  std::vector<VectorXd> out;
  out.reserve(std::size_t(1) << n);
  for (std::size_t mask = 0; mask < (std::size_t(1) << n); ++mask) {
    VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = (mask >> i) & 1 ? upper(i) : lower(i);
    out.push_back(std::move(v));
  }
  return out;
}

HPolytope::HPolytope(MatrixXd a, VectorXd rhs) : A(std::move(a)), b(std::move(rhs)) {
  if (A.rows() != b.size())
    throw std::invalid_argument("HPolytope: row count mismatch");
}

HPolytope HPolytope::from_box(const HyperInterval& box) {
  const int n = box.dim();
  MatrixXd A(2 * n, n);
  VectorXd b(2 * n);
  A.topRows(n) = MatrixXd::Identity(n, n);
  A.bottomRows(n) = -MatrixXd::Identity(n, n);
  b.head(n) = box.upper;
  b.tail(n) = -box.lower;
  return HPolytope(std::move(A), std::move(b));
}

HPolytope HPolytope::empty(int dim) {
  if (dim < 1) throw std::invalid_argument("HPolytope::empty: dim < 1");
  MatrixXd A = MatrixXd::Zero(2, dim);
  A(0, 0) = 1.0;
  A(1, 0) = -1.0;
  VectorXd b(2);
  b << -1.0, -1.0;
  return HPolytope(std::move(A), std::move(b));
}

bool Ellipsoid::contains(const VectorXd& x, double tol) const {
  if (x.size() != y.size())
    throw std::invalid_argument("Ellipsoid::contains: dimension mismatch");
  return (L * (x - y)).norm() <= 1.0 + tol;
}

HPolytope canonicalized(const HPolytope& p) {
  const int n = p.dim();
  std::vector<VectorXd> rows;
  std::vector<double> offs;
  for (int i = 0; i < p.rows(); ++i) {
    const double norm = p.A.row(i).norm();
    if (norm <= 1e-12) {
      if (p.b(i) < -kGeomTol) return HPolytope::empty(n);
      continue;  // 0.x <= nonnegative: trivially true
    }
    rows.push_back(p.A.row(i).transpose() / norm);
    offs.push_back(p.b(i) / norm);
  }

  // Sort rows lexicographically, then collapse runs of parallel normals to
  // the tightest offset. Near-parallel rows that fail the exact grouping are
  // left for the LP-based reduction; this pass is an optimization only.
  std::vector<int> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int c) {
    for (int k = 0; k < n; ++k) {
      if (rows[a](k) < rows[c](k)) return true;
      if (rows[a](k) > rows[c](k)) return false;
    }
    return offs[a] < offs[c];
  });

  std::vector<int> kept;
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    const int i = order[idx];
    if (!kept.empty()) {
      const int j = kept.back();
      if ((rows[i] - rows[j]).lpNorm<Eigen::Infinity>() <= 1e-9) {
        if (offs[i] < offs[j]) kept.back() = i;
        continue;
      }
    }
    kept.push_back(i);
  }

  MatrixXd A(kept.size(), n);
  VectorXd b(kept.size());
  for (std::size_t r = 0; r < kept.size(); ++r) {
    A.row(r) = rows[kept[r]].transpose();
    b(r) = offs[kept[r]];
  }
  return HPolytope(std::move(A), std::move(b));
}

bool contains_point(const HPolytope& p, const VectorXd& x, double tol) {
  if (x.size() != p.dim())
    throw std::invalid_argument("contains_point: dimension mismatch");
  for (int i = 0; i < p.rows(); ++i) {
    const double norm = p.A.row(i).norm();
    const double slack = p.A.row(i).dot(x) - p.b(i);
    if (norm <= 1e-12) {
      if (p.b(i) < -tol) return false;
    } else if (slack / norm > tol) {
      return false;
    }
  }
  return true;
}

bool is_empty(const HPolytope& p) {
  return !chebyshev_center(p.A, p.b).feasible;
}

bool is_subset(const HPolytope& p, const HPolytope& q, double tol) {
  if (p.dim() != q.dim())
    throw std::invalid_argument("is_subset: dimension mismatch");
  const HPolytope cq = canonicalized(q);
  for (int i = 0; i < cq.rows(); ++i) {
    const LpResult r = lp_maximize(cq.A.row(i).transpose(), p.A, p.b);
    switch (r.status) {
      case LpStatus::Infeasible:
        return true;  // p empty: vacuous inclusion
      case LpStatus::NoOptimum:
        return is_empty(p);  // unbounded support unless p is empty
      case LpStatus::Optimal:
        if (r.value > cq.b(i) + tol) return false;
        break;
    }
  }
  return true;
}

double support_value(const HPolytope& p, const VectorXd& dir) {
  const LpResult r = lp_maximize(dir, p.A, p.b);
  if (r.status != LpStatus::Optimal)
    throw LpError("support_value: empty polytope or unbounded direction");
  return r.value;
}

namespace {

HPolytope rows_subset(const HPolytope& p, const std::vector<int>& idx) {
  MatrixXd A(idx.size(), p.dim());
  VectorXd b(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    A.row(r) = p.A.row(idx[r]);
    b(r) = p.b(idx[r]);
  }
  return HPolytope(std::move(A), std::move(b));
}

// One LP per row against all other surviving rows. O(rows^2) LP work; used
// for small inputs, degenerate inputs, and as the cleanup pass after the
// Clarkson sweep.
HPolytope sequential_reduce(const HPolytope& c) {
  const int m = c.rows();
  std::vector<char> alive(m, 1);
  for (int i = 0; i < m; ++i) {
    std::vector<int> others;
    others.reserve(m - 1);
    for (int j = 0; j < m; ++j)
      if (j != i && alive[j]) others.push_back(j);
    if (others.empty()) continue;
    const HPolytope rest = rows_subset(c, others);
    const LpResult r = lp_maximize(c.A.row(i).transpose(), rest.A, rest.b);
    if (r.status == LpStatus::Optimal && r.value <= c.b(i) + kGeomTol)
      alive[i] = 0;
  }
  std::vector<int> kept;
  for (int i = 0; i < m; ++i)
    if (alive[i]) kept.push_back(i);
  return rows_subset(c, kept);
}

HPolytope clarkson_reduce(const HPolytope& c, const VectorXd& z) {
  const int m = c.rows();
  const int n = c.dim();

  // Test LPs carry a large bounding box around the interior point so that
  // unbounded directions cannot derail them. Box rows never enter the kept
  // set; facets of interest for this toolkit sit far inside the box. The
  // span stays moderate on purpose: box rows enter LP bases whenever the
  // set is unbounded, and their magnitude multiplies the rounding noise in
  // every reduced cost.
  const double span = 1e4 * (1.0 + z.cwiseAbs().maxCoeff());
  const HPolytope box = HPolytope::from_box(
      HyperInterval((z.array() - span).matrix(), (z.array() + span).matrix()));

  const VectorXd slack = c.b - c.A * z;  // strictly positive by construction

  std::vector<int> kept;
  std::vector<char> in_kept(m, 0);

  for (int i = 0; i < m; ++i) {
    if (in_kept[i]) continue;
    for (;;) {
      MatrixXd A(kept.size() + 1 + box.rows(), n);
      VectorXd b(kept.size() + 1 + box.rows());
      for (std::size_t r = 0; r < kept.size(); ++r) {
        A.row(r) = c.A.row(kept[r]);
        b(r) = c.b(kept[r]);
      }
      A.row(kept.size()) = c.A.row(i);
      b(kept.size()) = c.b(i) + 1.0;  // relaxed copy keeps this direction bounded
      A.bottomRows(box.rows()) = box.A;
      b.tail(box.rows()) = box.b;

      const LpResult r = lp_maximize(c.A.row(i).transpose(), A, b);
      if (r.status != LpStatus::Optimal)
        throw LpError("remove_redundant: unexpected solver status");
      if (r.value <= c.b(i) + kGeomTol) break;  // redundant given kept rows

      // Ray from z toward the witness: the first original row crossed is
      // tight at a boundary point of the full polytope, hence irredundant.
      const VectorXd d = r.x - z;
      const VectorXd ad = c.A * d;
      int hit = -1;
      double t_hit = std::numeric_limits<double>::infinity();
      for (int j = 0; j < m; ++j) {
        if (ad(j) <= 1e-12) continue;
        const double t = slack(j) / ad(j);
        if (t < t_hit - 1e-12) {
          t_hit = t;
          hit = j;
        }
      }
      if (hit < 0 || in_kept[hit]) {
        // Numerical corner (ties with an already-kept row): keep the
        // candidate itself rather than loop.
        hit = i;
      }
      kept.push_back(hit);
      in_kept[hit] = 1;
      if (hit == i) break;
    }
  }

  std::sort(kept.begin(), kept.end());
  // Degenerate ray hits can admit a weakly redundant row; a sequential pass
  // over the (small) kept set restores minimality.
  return sequential_reduce(rows_subset(c, kept));
}

HPolytope reduce_nonempty(const HPolytope& c, const ChebyshevResult& ch) {
  if (c.rows() <= 1) return c;
  if (ch.radius > 1e-9 && c.rows() > 48) return clarkson_reduce(c, ch.center);
  if (c.rows() > 4096)
    throw ProjectionError(
        "remove_redundant: " + std::to_string(c.rows()) +
        " rows with no interior point; refusing quadratic fallback");
  return sequential_reduce(c);
}

}  // namespace

HPolytope remove_redundant(const HPolytope& p) {
  const HPolytope c = canonicalized(p);
  const ChebyshevResult ch = chebyshev_center(c.A, c.b);
  if (!ch.feasible)
    throw std::invalid_argument("remove_redundant: empty polytope");
  return reduce_nonempty(c, ch);
}

HPolytope project_to_states(const HPolytope& p, int n_keep, std::size_t row_cap) {
  if (n_keep < 1 || n_keep > p.dim())
    throw std::invalid_argument("project_to_states: bad n_keep");

  HPolytope cur = canonicalized(p);
  for (int col = p.dim() - 1; col >= n_keep; --col) {
    std::vector<int> pos, neg, zero;
    for (int i = 0; i < cur.rows(); ++i) {
      const double a = cur.A(i, col);
      if (a > 1e-10) pos.push_back(i);
      else if (a < -1e-10) neg.push_back(i);
      else zero.push_back(i);
    }

    const std::size_t count = zero.size() + pos.size() * neg.size();
    if (count > row_cap)
      throw ProjectionError("project_to_states: eliminating column " +
                            std::to_string(col) + " yields " +
                            std::to_string(count) + " rows (cap " +
                            std::to_string(row_cap) + ")");

    MatrixXd A(count, col);
    VectorXd b(count);
    std::size_t r = 0;
    for (int i : zero) {
      A.row(r) = cur.A.row(i).head(col);
      b(r) = cur.b(i);
      ++r;
    }
    for (int ip : pos) {
      const double wp = cur.A(ip, col);
      for (int in : neg) {
        const double wn = -cur.A(in, col);
        A.row(r) = wn * cur.A.row(ip).head(col) + wp * cur.A.row(in).head(col);
        b(r) = wn * cur.b(ip) + wp * cur.b(in);
        ++r;
      }
    }

    const std::size_t raw = count;
    cur = canonicalized(HPolytope(std::move(A), std::move(b)));
    const int canon = cur.rows();
    if (cur.rows() > 1) {
      const ChebyshevResult ch = chebyshev_center(cur.A, cur.b);
      if (!ch.feasible) return HPolytope::empty(n_keep);
      cur = reduce_nonempty(cur, ch);
    }
    if (std::getenv("RCTL_GEOM_DEBUG"))
      std::fprintf(stderr, "project col=%d raw=%zu canon=%d reduced=%d\n",
                   col, raw, canon, cur.rows());
  }
  return cur;
}

bool box_in_polytope(const HyperInterval& box, const HPolytope& p, double tol) {
  if (box.dim() != p.dim())
    throw std::invalid_argument("box_in_polytope: dimension mismatch");
  const VectorXd c = box.center();
  const VectorXd h = box.half_width();
  for (int i = 0; i < p.rows(); ++i) {
    const double norm = p.A.row(i).norm();
    const double worst = p.A.row(i).dot(c) + p.A.row(i).cwiseAbs().dot(h);
    if (norm <= 1e-12) {
      if (p.b(i) < -tol) return false;
    } else if ((worst - p.b(i)) / norm > tol) {
      return false;
    }
  }
  return true;
}

void save_polytope(const std::string& path, const HPolytope& p,
                   const std::string& comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_polytope: cannot open " + path);
  out << "# rctl-polytope v1\n";
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "# rows=" << p.rows() << " dim=" << p.dim() << "\n";
  char buf[32];
  for (int i = 0; i < p.rows(); ++i) {
    for (int j = 0; j < p.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", p.A(i, j));
      out << buf << ' ';
    }
    std::snprintf(buf, sizeof buf, "%.17g", p.b(i));
    out << buf << '\n';
  }
  if (!out) throw std::runtime_error("save_polytope: write failed: " + path);
}

HPolytope load_polytope(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_polytope: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# rctl-polytope v1", 0) != 0)
    throw std::runtime_error("load_polytope: bad header in " + path);
  int rows = -1, dim = -1;
  // Any number of comment lines may precede the size line.
  while (std::getline(in, line)) {
    if (std::sscanf(line.c_str(), "# rows=%d dim=%d", &rows, &dim) == 2) break;
    if (line.rfind("# ", 0) != 0) break;
  }
  if (rows < 0 || dim < 1)
    throw std::runtime_error("load_polytope: bad size line in " + path);
  MatrixXd A(rows, dim);
  VectorXd b(rows);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < dim; ++j)
      if (!(in >> A(i, j)))
        throw std::runtime_error("load_polytope: truncated data in " + path);
    if (!(in >> b(i)))
      throw std::runtime_error("load_polytope: truncated data in " + path);
  }
  return HPolytope(std::move(A), std::move(b));
}

}  // namespace rctl
