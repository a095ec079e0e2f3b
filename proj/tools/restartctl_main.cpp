// restartctl — command-line front end for the synthesis and simulation
// toolkit. Subcommands: synth-grid, synth-linear, simulate, campaign,
// export-region. All file outputs are byte-deterministic; wall-clock
// timings go to stdout only.

#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "restartctl/abstraction.hpp"
#include "restartctl/dynamics.hpp"
#include "restartctl/faults.hpp"
#include "restartctl/geometry.hpp"
#include "restartctl/grid.hpp"
#include "restartctl/invariant_linear.hpp"
#include "restartctl/linprog.hpp"
#include "restartctl/runtime.hpp"
#include "restartctl/scenario.hpp"
#include "restartctl/synthesis.hpp"

namespace {

using namespace rctl;

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEmptyDomain = 3;
constexpr int kExitEmptyRegion = 4;
constexpr int kExitBudget = 5;
constexpr int kExitUnsafe = 6;
constexpr int kExitIo = 7;

// Output failures get their own exit code; everything else that throws
// std::runtime_error is an input or configuration problem.
struct WriteError {
  std::string what;
};

template <class F>
void write_step(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    throw WriteError{e.what()};
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// Axis-aligned bounding box of a polytope via support LPs.
HyperInterval polytope_bbox(const HPolytope& p) {
  const int n = p.dim();
  Eigen::VectorXd lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(n);
    dir(i) = 1.0;
    try {
      hi(i) = support_value(p, dir);
      lo(i) = -support_value(p, -dir);
    } catch (const LpError&) {
      throw ConfigError(
          "safe set is unbounded along axis " + std::to_string(i) +
          "; grid synthesis needs a bounded safe set");
    }
  }
  return HyperInterval(lo, hi);
}

struct SynthGridOpts {
  std::string config;
  std::string out;
  std::string csv;
  std::string stats;
  bool serial = false;
};

int cmd_synth_grid(const SynthGridOpts& o) {
  const SynthConfig sc = load_synth_config(o.config);
  if (sc.mode != "grid")
    throw ConfigError(o.config + ": synth-grid needs mode=grid, got '" +
                      sc.mode + "'");

  ControlSystem sys;
  HPolytope safe;
  if (sc.plant == "pendulum") {
    sys = pendulum_system();
    safe = pendulum_safe_set();
  } else {
    const HelicopterModel hm = load_helicopter(sc.plant);
    sys = linear_as_control_system(hm.sys);
    safe = hm.safe_x;
  }
  if (sc.eta.size() != sys.state_dim)
    throw ConfigError(o.config + ": eta has " + std::to_string(sc.eta.size()) +
                      " entries for a " + std::to_string(sys.state_dim) +
                      "-state plant");

  const double tau_r = double(sc.m) * sc.tau_c;
  const SymbolicGrid grid = SymbolicGrid::create(polytope_bbox(safe), sc.eta);
  const auto inputs = input_grid(sys.input_bounds, sc.input_counts);

  std::printf("plant          %s\n", sys.name.c_str());
  std::printf("grid cells     %u\n", grid.cell_count());
  std::printf("inputs         %zu\n", inputs.size());
  std::printf("tau_c / tau_r  %g / %g s\n", sc.tau_c, tau_r);

  const auto t0 = std::chrono::steady_clock::now();
  const double margin = shrink_margin(sys, grid, inputs, safe, sc.tau_c,
                                      tau_r, sc.step_h, sc.margin_pairs);
  std::printf("margin         %.6g (%.2fs)\n", margin, seconds_since(t0));

  const HPolytope shrunk = shrink_polytope(safe, margin);
  const auto t1 = std::chrono::steady_clock::now();
  const AbstractSystem abs =
      o.serial ? build_abstraction_serial(sys, grid, inputs, sc.tau_c, tau_r,
                                          sc.step_h)
               : build_abstraction(sys, grid, inputs, sc.tau_c, tau_r,
                                   sc.step_h);
  std::printf("abstraction    %" PRIu64 " pairs (%.2fs%s)\n", abs.pair_count(),
              seconds_since(t1), o.serial ? ", serial" : "");

  const auto safe_cells = abstract_safe_set(abs, shrunk);
  const SafetyResult res = solve_safety(abs, safe_cells);
  std::printf("safe cells     %u\n", res.safe_count);
  std::printf("domain cells   %u\n", res.invariant_count);
  std::printf("config hash    %016" PRIx64 "\n", sc.hash);

  if (res.invariant_count == 0) {
    std::printf("result         EMPTY DOMAIN: no cell admits an input whose "
                "successors stay inside the safe cells\n");
    return kExitEmptyDomain;
  }

  RefinedController ctl = refine(abs, res.invariant, margin, sys.name);
  ctl.config_hash = sc.hash;
  write_step([&] { save_controller(o.out, ctl); });
  std::printf("controller     %s\n", o.out.c_str());
  if (!o.csv.empty()) {
    write_step([&] { export_domain_csv(o.csv, ctl); });
    std::printf("domain csv     %s\n", o.csv.c_str());
  }
  if (!o.stats.empty()) {
    write_step([&] {
      std::FILE* f = std::fopen(o.stats.c_str(), "wb");
      if (!f) throw std::runtime_error("cannot write " + o.stats);
      std::fprintf(f, "# rctl-synth-stats v1\n");
      std::fprintf(f, "config_hash %016" PRIx64 "\n", sc.hash);
      std::fprintf(f, "plant %s\n", sys.name.c_str());
      std::fprintf(f, "cells %u\n", grid.cell_count());
      std::fprintf(f, "inputs %zu\n", inputs.size());
      std::fprintf(f, "margin %.17g\n", margin);
      std::fprintf(f, "safe_cells %u\n", res.safe_count);
      std::fprintf(f, "domain_cells %u\n", res.invariant_count);
      std::fclose(f);
    });
    std::printf("stats          %s\n", o.stats.c_str());
  }
  std::printf("total          %.2fs\n", seconds_since(t0));
  return kExitOk;
}

struct SynthLinearOpts {
  std::string config;
  std::string out;
  std::string log;
};

int cmd_synth_linear(const SynthLinearOpts& o) {
  const SynthConfig sc = load_synth_config(o.config);
  if (sc.mode != "linear")
    throw ConfigError(o.config + ": synth-linear needs mode=linear, got '" +
                      sc.mode + "'");
  if (sc.plant == "pendulum")
    throw ConfigError(o.config +
                      ": linear synthesis needs a linear plant file");

  const HelicopterModel hm = load_helicopter(sc.plant);
  const DiscreteLinear d = discretize(hm.sys, sc.tau_c);
  const HorizonMatrices hold = horizon_matrices(d, sc.m);
  const HPolytope ipoly = helicopter_input_poly(hm);

  std::printf("plant          %s\n", hm.sys.name.c_str());
  std::printf("tau_c / m      %g s / %d\n", sc.tau_c, sc.m);
  std::printf("safe rows      %d (adjusted)\n", hm.adjusted_safe_x.rows());
  std::printf("input rows     %d\n", ipoly.rows());

  InvOptions opt;
  opt.p_max = sc.p_max;
  const auto t0 = std::chrono::steady_clock::now();
  const InvResult r =
      compute_inv_region(hm.adjusted_safe_x, ipoly, d, hold, opt);
  const double wall = seconds_since(t0);

  std::printf("status         %s\n", inv_status_name(r.status));
  std::printf("iterations     %d\n", r.iterations);
  for (std::size_t i = 0; i < r.row_counts.size(); ++i)
    std::printf("  iterate %-4zu %td rows\n", i,
                std::ptrdiff_t(r.row_counts[i]));
  std::printf("config hash    %016" PRIx64 "\n", sc.hash);
  std::printf("total          %.2fs\n", wall);

  if (!o.log.empty()) {
    write_step([&] {
      std::FILE* f = std::fopen(o.log.c_str(), "wb");
      if (!f) throw std::runtime_error("cannot write " + o.log);
      std::fprintf(f, "# rctl-inv-log v1\n");
      std::fprintf(f, "config_hash %016" PRIx64 "\n", sc.hash);
      std::fprintf(f, "status %s\n", inv_status_name(r.status));
      std::fprintf(f, "iterations %d\n", r.iterations);
      for (std::size_t i = 0; i < r.row_counts.size(); ++i)
        std::fprintf(f, "rows %zu %td\n", i, std::ptrdiff_t(r.row_counts[i]));
      std::fclose(f);
    });
  }

  switch (r.status) {
    case InvStatus::Empty:
      std::printf("result         EMPTY: the region collapsed; the plant "
                  "cannot ride out a restart from anywhere in the safe set\n");
      return kExitEmptyRegion;
    case InvStatus::BudgetExceeded:
      std::printf("result         BUDGET EXCEEDED after %d iterations\n",
                  r.iterations);
      return kExitBudget;
    case InvStatus::Success:
      break;
  }

  char comment[40];
  std::snprintf(comment, sizeof comment, "config-hash=%016" PRIx64, sc.hash);
  write_step([&] { save_polytope(o.out, r.region, comment); });
  std::printf("region         %s (%d rows)\n", o.out.c_str(),
              r.region.rows());
  return kExitOk;
}

struct SimulateOpts {
  std::string scenario;
  std::string trace;
};

int cmd_simulate(const SimulateOpts& o) {
  const auto sc = load_scenario(o.scenario);
  const SimTrace tr = run_scenario_trial(*sc, sc->faults, 0, 0.0, 0);

  std::uint64_t restarts = 0, mc_cycles = 0;
  for (const auto& c : tr.cycles) {
    if (c.restart) ++restarts;
    if (c.decision == Decision::Mission) ++mc_cycles;
  }
  std::printf("plant          %s\n", sc->plant_name.c_str());
  std::printf("cycles         %zu (%" PRIu64 " mission, %" PRIu64
              " restarts)\n",
              tr.cycles.size(), mc_cycles, restarts);
  std::printf("final time     %g s\n", tr.t_final);
  std::printf("config hash    %016" PRIx64 "\n", tr.config_hash);
  if (!o.trace.empty()) {
    write_step([&] { write_trace_csv(o.trace, tr); });
    std::printf("trace          %s\n", o.trace.c_str());
  }
  if (tr.safety_violation) {
    std::printf("result         SAFETY VIOLATION at t=%g s\n",
                tr.first_violation_time);
    return kExitUnsafe;
  }
  std::printf("result         safe\n");
  return kExitOk;
}

struct CampaignOpts {
  std::string config;
  std::string out;
};

int cmd_campaign(const CampaignOpts& o) {
  const CampaignFile cf = load_campaign_config(o.config);
  auto sc = load_scenario(cf.scenario_path);
  sc->sim.cycles = cf.cfg.cycles;  // the campaign horizon wins

  const TrialRunner runner = [&](const std::vector<FaultSpec>& specs,
                                 std::uint64_t trial) {
    return run_scenario_trial(*sc, specs, trial, cf.x0_jitter, cf.cfg.seed);
  };
  const auto t0 = std::chrono::steady_clock::now();
  const CampaignResult res =
      run_campaign(runner, cf.kinds, cf.cfg, sc->sim.sched.m);
  const double wall = seconds_since(t0);

  std::printf("%s", format_campaign_table(res).c_str());
  std::printf("config hash    %016" PRIx64 "\n", res.config_hash);
  std::printf("total          %.2fs\n", wall);
  if (!o.out.empty()) {
    write_step([&] { write_campaign_csv(o.out, res); });
    std::printf("report         %s\n", o.out.c_str());
  }

  std::uint64_t violations = 0;
  for (const auto& row : res.rows) violations += row.violations;
  if (violations > 0) {
    std::printf("result         SAFETY VIOLATION in %" PRIu64 " trial(s)\n",
                violations);
    return kExitUnsafe;
  }
  std::printf("result         safe%s\n",
              res.all_conform ? ", restart pattern as expected"
                              : "; NOTE restart pattern deviates (see table)");
  return kExitOk;
}

struct ExportOpts {
  std::string controller;
  std::string out;
};

int cmd_export_region(const ExportOpts& o) {
  const RefinedController ctl = load_controller(o.controller);
  write_step([&] { export_domain_csv(o.out, ctl); });
  std::printf("plant          %s\n", ctl.plant.c_str());
  std::printf("domain cells   %u of %u\n", ctl.domain_size(),
              ctl.grid.cell_count());
  std::printf("config hash    %016" PRIx64 "\n", ctl.config_hash);
  std::printf("csv            %s\n", o.out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef _OPENMP
  if (const char* env = std::getenv("RCTL_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
#endif

  CLI::App app{
      "restart-tolerant base controller synthesis and simulation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "restartctl 1.0.0");

  SynthGridOpts sg;
  auto* c_sg = app.add_subcommand(
      "synth-grid",
      "Synthesize a lookup-table controller over a state-space grid");
  c_sg->add_option("--config", sg.config, "synthesis config file")
      ->required();
  c_sg->add_option("--out", sg.out, "controller output file")->required();
  c_sg->add_option("--csv", sg.csv, "also export the domain as CSV");
  c_sg->add_option("--stats", sg.stats, "write a deterministic stats file");
  c_sg->add_flag("--serial", sg.serial,
                 "use the serial reference construction");

  SynthLinearOpts sl;
  auto* c_sl = app.add_subcommand(
      "synth-linear",
      "Compute the restart-tolerant region of a linear plant");
  c_sl->add_option("--config", sl.config, "synthesis config file")
      ->required();
  c_sl->add_option("--out", sl.out, "region polytope output file")
      ->required();
  c_sl->add_option("--log", sl.log, "write the iteration log");

  SimulateOpts sim;
  auto* c_sim = app.add_subcommand(
      "simulate", "Run one scenario and optionally dump the cycle trace");
  c_sim->add_option("--scenario", sim.scenario, "scenario file")->required();
  c_sim->add_option("--trace", sim.trace, "trace CSV output file");

  CampaignOpts cam;
  auto* c_cam = app.add_subcommand(
      "campaign", "Sweep fault kinds over a scenario and tabulate recovery");
  c_cam->add_option("--config", cam.config, "campaign config file")
      ->required();
  c_cam->add_option("--out", cam.out, "report CSV output file");

  ExportOpts ex;
  auto* c_ex = app.add_subcommand(
      "export-region", "Dump a stored controller's domain as CSV");
  c_ex->add_option("--controller", ex.controller, "controller file")
      ->required();
  c_ex->add_option("--out", ex.out, "CSV output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    // Help and version exit clean; anything else is a usage error.
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (c_sg->parsed()) return cmd_synth_grid(sg);
    if (c_sl->parsed()) return cmd_synth_linear(sl);
    if (c_sim->parsed()) return cmd_simulate(sim);
    if (c_cam->parsed()) return cmd_campaign(cam);
    if (c_ex->parsed()) return cmd_export_region(ex);
  } catch (const WriteError& e) {
    std::fprintf(stderr, "error: %s\n", e.what.c_str());
    return kExitIo;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const ProjectionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitBudget;
  } catch (const LpError& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitConfig;
}
