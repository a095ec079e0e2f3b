#include <unistd.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "restartctl/dynamics.hpp"
#include "restartctl/rng.hpp"
#include "restartctl/synthesis.hpp"

using namespace rctl;

namespace {

std::string temp_path(const char* stem) {
  return std::string("/tmp/") + stem + "_" + std::to_string(::getpid());
}

// Abstraction with exactly the given transitions; one input, never blocked.
AbstractSystem chain_abstraction(
    const std::vector<std::vector<std::uint32_t>>& succ) {
  const int n = int(succ.size());
  AbstractSystem abs;
  abs.grid = SymbolicGrid::create(
      HyperInterval(Eigen::VectorXd::Constant(1, -0.5),
                    Eigen::VectorXd::Constant(1, n - 0.5)),
      Eigen::VectorXd::Constant(1, 1.0));
  abs.inputs = {Eigen::VectorXd::Zero(1)};
  abs.tau_c = 0.05;
  abs.tau_r = 0.25;
  abs.step_h = 0.01;
  abs.offsets.assign(1, 0);
  for (const auto& t : succ) {
    for (auto id : t) abs.targets.push_back(id);
    abs.offsets.push_back(abs.targets.size());
    abs.blocked.push_back(0);
  }
  return abs;
}

}  // namespace

TEST_CASE("shrinking a box polytope pulls every face inward") {
  Eigen::MatrixXd A(4, 2);
  A << 2, 0, -2, 0, 0, 1, 0, -1;  // non-unit rows get normalized first
  Eigen::VectorXd b(4);
  b << 4, 4, 1, 1;
  const HPolytope S{A, b};
  const HPolytope T = shrink_polytope(S, 0.25);
  // Normalized box [-2,2] x [-1,1] shrunk to [-1.75,1.75] x [-0.75,0.75].
  Eigen::Vector2d inside(1.7, 0.7), outside(1.8, 0.0);
  CHECK(contains_point(T, inside));
  CHECK(!contains_point(T, outside));
  CHECK(contains_point(S, outside));
}

TEST_CASE("abstract safe set agrees with a vertex oracle") {
  const ControlSystem sys = pendulum_system();
  SymbolicGrid g = SymbolicGrid::create(
      HyperInterval(Eigen::Vector2d(0.75 * M_PI, -1.0),
                    Eigen::Vector2d(1.25 * M_PI, 1.0)),
      Eigen::Vector2d(0.2, 0.4));
  AbstractSystem abs;
  abs.grid = g;
  abs.inputs = {Eigen::VectorXd::Zero(1)};

  // A disc-like polytope strictly inside the gridded region.
  const Eigen::Vector2d c(M_PI, 0.0);
  Eigen::MatrixXd A(8, 2);
  Eigen::VectorXd b(8);
  for (int i = 0; i < 8; ++i) {
    const double th = 2.0 * M_PI * i / 8;
    A.row(i) << std::cos(th), std::sin(th);
    b(i) = 0.55 + A.row(i).dot(c);
  }
  const HPolytope region{A, b};

  const auto flags = abstract_safe_set(abs, region);
  REQUIRE(flags.size() == g.cell_count());
  std::uint32_t hits = 0;
  for (std::uint32_t id = 0; id < g.cell_count(); ++id) {
    const HyperInterval box = g.cell_box(id);
    bool all_in = true;
    for (const auto& v : box.vertices())
      all_in = all_in && contains_point(region, v);
    CHECK(bool(flags[id]) == all_in);
    hits += flags[id];
  }
  CHECK(hits > 0);
  CHECK(hits < g.cell_count());
}

TEST_CASE("self-looping cells survive and a doomed chain empties") {
  // 0 -> {0}, 1 -> {0,1}: both invariant when both safe.
  {
    const AbstractSystem abs = chain_abstraction({{0}, {0, 1}});
    const SafetyResult r = solve_safety(abs, {1, 1});
    CHECK(r.invariant == std::vector<std::uint8_t>{1, 1});
    CHECK(r.invariant_count == 2);
    CHECK(r.first_removed.empty());
  }
  // 0 -> {1}, 1 -> {2}, 2 -> {2}, with 2 unsafe: everything unravels.
  {
    const AbstractSystem abs = chain_abstraction({{1}, {2}, {2}});
    const SafetyResult r = solve_safety(abs, {1, 1, 0});
    CHECK(r.invariant == std::vector<std::uint8_t>{0, 0, 0});
    CHECK(r.invariant_count == 0);
    REQUIRE(r.first_removed.size() == 2);
    CHECK(r.first_removed[0] == 1);  // loses its only target first
    CHECK(r.first_removed[1] == 0);
  }
  // Same chain but 2 safe: all three stay.
  {
    const AbstractSystem abs = chain_abstraction({{1}, {2}, {2}});
    const SafetyResult r = solve_safety(abs, {1, 1, 1});
    CHECK(r.invariant_count == 3);
  }
}

TEST_CASE("a blocked-only cell cannot be invariant") {
  AbstractSystem abs = chain_abstraction({{0}, {1}});
  abs.blocked[1] = 1;
  abs.targets.erase(abs.targets.begin() + 1);
  abs.offsets[2] = 1;
  const SafetyResult r = solve_safety(abs, {1, 1});
  CHECK(r.invariant == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("fixed point matches the deletion oracle on random abstractions") {
  DetRng rng(555);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + int(rng.below(29));
    const auto abs = oracle::random_abstraction(rng, n, 1 + int(rng.below(3)),
                                                0.15, 4);
    std::vector<std::uint8_t> safe(n);
    for (auto& s : safe) s = rng.uniform01() < 0.8 ? 1 : 0;
    const SafetyResult r = solve_safety(abs, safe);
    const auto naive = oracle::invariant_naive(abs, safe);
    CHECK(r.invariant == naive);
    std::uint32_t count = 0;
    for (auto v : naive) count += v;
    CHECK(r.invariant_count == count);
  }
}

TEST_CASE("fixed point matches closed-subset enumeration on tiny abstractions") {
  DetRng rng(777);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + int(rng.below(11));
    const auto abs =
        oracle::random_abstraction(rng, n, 1 + int(rng.below(2)), 0.2, 3);
    std::vector<std::uint8_t> safe(n);
    for (auto& s : safe) s = rng.uniform01() < 0.75 ? 1 : 0;
    const SafetyResult r = solve_safety(abs, safe);
    CHECK(r.invariant == oracle::invariant_exponential(abs, safe));
  }
}

TEST_CASE("growing the safe set never shrinks the invariant set") {
  DetRng rng(901);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + int(rng.below(20));
    const auto abs = oracle::random_abstraction(rng, n, 2, 0.1, 4);
    std::vector<std::uint8_t> small(n), big(n);
    for (int i = 0; i < n; ++i) {
      small[i] = rng.uniform01() < 0.6 ? 1 : 0;
      big[i] = small[i] | (rng.uniform01() < 0.3 ? 1 : 0);
    }
    const auto rs = solve_safety(abs, small);
    const auto rb = solve_safety(abs, big);
    for (int i = 0; i < n; ++i)
      if (rs.invariant[i]) CHECK(rb.invariant[i]);
  }
}

TEST_CASE("refinement keeps exactly the inputs that stay inside") {
  // Two inputs: input 0 loops in place, input 1 jumps to the doomed cell 2.
  AbstractSystem abs;
  abs.grid = SymbolicGrid::create(
      HyperInterval(Eigen::VectorXd::Constant(1, -0.5),
                    Eigen::VectorXd::Constant(1, 2.5)),
      Eigen::VectorXd::Constant(1, 1.0));
  abs.inputs = {Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 1.0)};
  abs.tau_c = 0.05;
  abs.tau_r = 0.25;
  abs.step_h = 0.01;
  const std::vector<std::vector<std::uint32_t>> succ = {
      {0}, {2}, {2}, {1}, {2}, {2}};  // pair = cell * 2 + j
  abs.offsets.assign(1, 0);
  for (const auto& t : succ) {
    for (auto id : t) abs.targets.push_back(id);
    abs.offsets.push_back(abs.targets.size());
    abs.blocked.push_back(0);
  }

  const SafetyResult r = solve_safety(abs, {1, 1, 0});
  REQUIRE(r.invariant == std::vector<std::uint8_t>{1, 1, 0});

  const RefinedController ctl = refine(abs, r.invariant, 0.01, "toy");
  CHECK(ctl.domain == r.invariant);
  CHECK(ctl.pair_admissible(0, 0));
  CHECK(!ctl.pair_admissible(0, 1));  // jumps to 2
  CHECK(!ctl.pair_admissible(1, 0));  // jumps to 2
  CHECK(ctl.pair_admissible(1, 1));   // loops back to 1
  CHECK(!ctl.pair_admissible(2, 0));
  CHECK(!ctl.pair_admissible(2, 1));
  CHECK(ctl.choose_input(0).value() == 0);
  CHECK(ctl.choose_input(1).value() == 1);
  CHECK(!ctl.choose_input(2).has_value());
  CHECK(ctl.domain_size() == 2);
  CHECK(ctl.margin == doctest::Approx(0.01));
}

TEST_CASE("refinement rejects an invariant set the table cannot support") {
  const AbstractSystem abs = chain_abstraction({{1}, {2}, {2}});
  // Cell 0 only reaches 1, so claiming {0, 2} invariant is inconsistent.
  CHECK_THROWS_AS(refine(abs, {1, 0, 1}, 0.0, "toy"), std::logic_error);
}

TEST_CASE("closed set: every admissible move of every domain cell stays inside") {
  DetRng rng(444);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 4 + int(rng.below(20));
    const auto abs = oracle::random_abstraction(rng, n, 2, 0.15, 4);
    std::vector<std::uint8_t> safe(n, 1);
    const SafetyResult r = solve_safety(abs, safe);
    if (r.invariant_count == 0) continue;
    const RefinedController ctl = refine(abs, r.invariant, 0.0, "rand");
    for (std::uint32_t cell = 0; cell < std::uint32_t(n); ++cell) {
      if (!ctl.in_domain(cell)) continue;
      bool any = false;
      for (std::size_t j = 0; j < abs.inputs.size(); ++j) {
        if (!ctl.pair_admissible(cell, j)) continue;
        any = true;
        auto [beg, end] = abs.pair_targets(cell, j);
        for (const std::uint32_t* p = beg; p != end; ++p)
          CHECK(ctl.in_domain(*p));
      }
      CHECK(any);
    }
  }
}

TEST_CASE("static flow needs no inter-sample margin") {
  ControlSystem sys;
  sys.name = "still";
  sys.state_dim = 1;
  sys.input_dim = 1;
  sys.rhs = [](const Eigen::VectorXd&, const Eigen::VectorXd&,
               Eigen::VectorXd& dx) { dx = Eigen::VectorXd::Zero(1); };
  sys.input_bounds = HyperInterval(Eigen::VectorXd::Constant(1, -1),
                                   Eigen::VectorXd::Constant(1, 1));
  sys.operating_box = HyperInterval(Eigen::VectorXd::Constant(1, -10),
                                    Eigen::VectorXd::Constant(1, 10));
  sys.growth.jacobian_bound = [](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Zero(1, 1);
  };
  SymbolicGrid g = SymbolicGrid::create(
      HyperInterval(Eigen::VectorXd::Constant(1, -2),
                    Eigen::VectorXd::Constant(1, 2)),
      Eigen::VectorXd::Constant(1, 0.5));
  Eigen::MatrixXd A(2, 1);
  A << 1, -1;
  Eigen::VectorXd b(2);
  b << 2, 2;
  const double m = shrink_margin(sys, g, {Eigen::VectorXd::Zero(1)},
                                 HPolytope{A, b}, 0.05, 0.25, 0.01);
  CHECK(m == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pendulum inter-sample margin is small but strictly positive") {
  const ControlSystem sys = pendulum_system();
  SymbolicGrid g = SymbolicGrid::create(
      HyperInterval(Eigen::Vector2d(0.75 * M_PI, -1.0),
                    Eigen::Vector2d(1.25 * M_PI, 1.0)),
      Eigen::Vector2d(0.05, 0.1));
  Eigen::VectorXi counts(1);
  counts << 17;
  const auto inputs = input_grid(sys.input_bounds, counts);
  const HPolytope S = pendulum_safe_set();
  const double m =
      shrink_margin(sys, g, inputs, S, 0.05, 0.25, 0.001, 400);
  CHECK(m > 0.0);
  CHECK(m < 0.2);
}

TEST_CASE("controller round-trips through its binary format") {
  const AbstractSystem abs = chain_abstraction({{0}, {0, 1}});
  const SafetyResult r = solve_safety(abs, {1, 1});
  RefinedController ctl = refine(abs, r.invariant, 0.033, "toy");
  ctl.config_hash = 0x1234abcd5678ef01ull;

  const std::string path = temp_path("ctl_roundtrip");
  save_controller(path, ctl);
  const RefinedController back = load_controller(path);
  CHECK(back.plant == ctl.plant);
  CHECK(back.grid.same_layout(ctl.grid));
  CHECK(back.inputs.size() == ctl.inputs.size());
  for (std::size_t j = 0; j < back.inputs.size(); ++j)
    CHECK(back.inputs[j] == ctl.inputs[j]);
  CHECK(back.tau_c == ctl.tau_c);
  CHECK(back.tau_r == ctl.tau_r);
  CHECK(back.step_h == ctl.step_h);
  CHECK(back.margin == ctl.margin);
  CHECK(back.config_hash == ctl.config_hash);
  CHECK(back.domain == ctl.domain);
  CHECK(back.admissible == ctl.admissible);
  std::remove(path.c_str());
}

TEST_CASE("controller loader rejects foreign files") {
  const std::string path = temp_path("ctl_corrupt");
  {
    std::ofstream f(path, std::ios::binary);
    f << "RCTLABS1 this is the wrong kind of file";
  }
  CHECK_THROWS_AS(load_controller(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("domain export writes a header plus one line per domain cell") {
  const AbstractSystem abs = chain_abstraction({{0}, {0, 1}});
  const SafetyResult r = solve_safety(abs, {1, 1});
  const RefinedController ctl = refine(abs, r.invariant, 0.0, "toy");
  const std::string path = temp_path("ctl_csv");
  export_domain_csv(path, ctl);
  std::ifstream f(path);
  REQUIRE(f.good());
  std::size_t lines = 0;
  std::string line, first;
  while (std::getline(f, line)) {
    if (lines == 0) first = line;
    ++lines;
  }
  CHECK(lines == 1 + ctl.domain_size());
  CHECK(first.find("cell") != std::string::npos);
  std::remove(path.c_str());
}
