#include "restartctl/runtime.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace rctl {

void validate_schedule(const CycleSchedule& s) {
  if (!(s.tau_c > 0.0)) throw std::invalid_argument("schedule: tau_c <= 0");
  if (s.m < 1) throw std::invalid_argument("schedule: m < 1");
  if (s.epsilon < 0.0) throw std::invalid_argument("schedule: epsilon < 0");
  if (!(s.lead() < s.tau_c))
    throw std::invalid_argument("schedule: sensor lead must stay below tau_c");
}

bool dm_accepts(const ControlSystem& sys, const SafetyMonitor& mon,
                const CycleSchedule& sched, double h,
                const Eigen::VectorXd& x_prev, const Eigen::VectorXd& u_prev,
                const Eigen::VectorXd& u_mc) {
  if (u_mc.size() != sys.input_dim || !u_mc.allFinite()) return false;
  if (!sys.input_bounds.contains(u_mc)) return false;

  const ReachBox pred = predict_state(sys, x_prev, u_prev, sched.tau_c, h);
  if (pred.overflow) return false;

  const double tau_long = sched.tau_c + sched.tau_r();
  const DualReach dr =
      reach_dual(sys, pred.box, u_mc, sched.tau_c, tau_long, h);
  if (dr.overflow) return false;

  if (mon.grid_ctl) {
    const auto inside = [&](const HyperInterval& b) {
      std::vector<std::uint32_t> ids;
      if (!mon.grid_ctl->grid.cover(b, ids) || ids.empty()) return false;
      for (std::uint32_t id : ids)
        if (!mon.grid_ctl->in_domain(id)) return false;
      return true;
    };
    if (!inside(dr.at_short) || !inside(dr.at_long)) return false;
  } else if (mon.region) {
    if (!box_in_polytope(dr.at_short, *mon.region) ||
        !box_in_polytope(dr.at_long, *mon.region))
      return false;
  } else {
    return false;
  }

  const ReachTube tube =
      reach_tube(sys, pred.box, u_mc, tau_long, mon.tube_segments, h);
  if (tube.overflow) return false;
  for (const auto& seg : tube.segments)
    if (!box_in_polytope(seg, mon.safe)) return false;
  return true;
}

namespace {

Eigen::VectorXd clamp_to_box(const Eigen::VectorXd& u,
                             const HyperInterval& box) {
  Eigen::VectorXd out = u;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out(i) < box.lower(i)) out(i) = box.lower(i);
    if (out(i) > box.upper(i)) out(i) = box.upper(i);
  }
  return out;
}

}  // namespace

SimTrace run_simulation(const ControlSystem& sys, const SafetyMonitor& mon,
                        const MissionFn& mc, const BaseFn& bc,
                        const SimConfig& cfg, const FaultHook& faults) {
  validate_schedule(cfg.sched);
  if (!(cfg.step_h > 0.0))
    throw std::invalid_argument("simulation: step_h must be positive");
  if (cfg.cycles == 0)
    throw std::invalid_argument("simulation: zero-cycle horizon");
  if (cfg.x0.size() != sys.state_dim || !cfg.x0.allFinite())
    throw std::invalid_argument("simulation: bad initial state");
  if (!bc) throw std::invalid_argument("simulation: missing base controller");
  if (mon.safe.rows() == 0)
    throw std::invalid_argument("simulation: missing safe set");

  if (mon.grid_ctl) {
    const auto q = mon.grid_ctl->grid.quantize(cfg.x0);
    if (!q || !mon.grid_ctl->in_domain(*q))
      throw std::invalid_argument(
          "simulation: initial state outside the controller domain");
  } else if (mon.region) {
    if (!contains_point(*mon.region, cfg.x0, 1e-7))
      throw std::invalid_argument(
          "simulation: initial state outside the invariant region");
  } else {
    throw std::invalid_argument("simulation: monitor has no region");
  }

  Eigen::VectorXd latch;
  if (cfg.init_cmd == "bc") {
    const auto u = bc(cfg.x0);
    if (!u)
      throw std::invalid_argument(
          "simulation: base controller undefined at the initial state");
    latch = *u;
  } else if (cfg.init_cmd == "zero") {
    latch = Eigen::VectorXd::Zero(sys.input_dim);
  } else if (cfg.init_cmd == "given") {
    if (cfg.init_u.size() != sys.input_dim || !cfg.init_u.allFinite())
      throw std::invalid_argument("simulation: bad initial command");
    latch = cfg.init_u;
  } else {
    throw std::invalid_argument("simulation: unknown init_cmd '" +
                                cfg.init_cmd + "'");
  }
  latch = clamp_to_box(latch, sys.input_bounds);

  SimTrace trace;
  trace.config_hash = cfg.config_hash;
  trace.cycles.reserve(cfg.cycles);

  const double tau_c = cfg.sched.tau_c;
  const double eps = cfg.sched.lead();
  const double tau_r = cfg.sched.tau_r();

  Eigen::VectorXd x = cfg.x0;
  double t = 0.0;
  int boot_cycle = 0;  // last completed cycle since boot
  std::optional<Eigen::VectorXd> sample_prev, sample_prev2;

  // Advances the plant under the latch, recording the first instant the
  // dense trajectory leaves the safe set.
  const auto advance = [&](double span, bool* cycle_safe) {
    const auto mesh = dense_trajectory(sys, x, latch, span, cfg.step_h);
    const double step = cfg.step_h;
    for (std::size_t i = 0; i < mesh.size(); ++i) {
      if (!contains_point(mon.safe, mesh[i], 1e-7)) {
        if (cycle_safe) *cycle_safe = false;
        if (!trace.safety_violation) {
          trace.safety_violation = true;
          trace.first_violation_time =
              t + std::min(double(i) * step, span);
        }
      }
    }
    x = mesh.back();
    t += span;
  };

  for (std::uint64_t global = 1; global <= cfg.cycles; ++global) {
    const int k = boot_cycle + 1;
    CycleRecord rec;
    rec.global_cycle = global;
    rec.boot_cycle = k;
    bool cycle_safe = true;

    FaultActions fa;
    if (faults) fa = faults(global, k);
    rec.fault = fa.tag;

    // Mission stage: runs on the previous sample; nothing to run on before
    // the first sample of a boot.
    std::optional<Eigen::VectorXd> mc_out;
    if (!fa.suppress_all && !fa.mc_no_output && mc && sample_prev) {
      const Eigen::VectorXd& basis =
          (fa.mc_stale && sample_prev2) ? *sample_prev2 : *sample_prev;
      if (fa.mc_override) {
        mc_out = fa.mc_override(basis);
      } else {
        mc_out = fa.mc_gain * mc(basis);
      }
    }

    // Decision stage: first cycle after boot always selects the base
    // controller; otherwise the prediction-based checks decide.
    bool dm_ran = false;
    Decision dec = Decision::Base;
    if (!fa.suppress_all) {
      dm_ran = true;
      if (k > 1 && sample_prev && mc_out &&
          dm_accepts(sys, mon, cfg.sched, cfg.step_h, *sample_prev, latch,
                     *mc_out))
        dec = Decision::Mission;
    }

    // Plant to the sensor instant, sample, then base stage on the sample.
    advance(tau_c - eps, &cycle_safe);
    const Eigen::VectorXd sample = x;
    rec.x_sample = sample;

    std::optional<Eigen::VectorXd> bc_out;
    bool bc_ran = false;
    if (!fa.suppress_all && !fa.suppress_bc) {
      bc_out = bc(sample);
      if (bc_out) {
        bc_ran = true;
      } else {
        rec.note = "sample-outside-domain";
      }
    }

    if (mc_out) rec.u_mc = *mc_out;
    if (bc_out) rec.u_bc = *bc_out;
    rec.decision = dec;

    // Tail of the cycle still runs on the old latch; the flushing task
    // writes the chosen command exactly at the boundary.
    advance(eps, &cycle_safe);

    const bool flush_ok = !fa.suppress_all && !fa.suppress_flush && dm_ran &&
                          bc_ran && !fa.force_reboot;
    if (flush_ok) {
      const Eigen::VectorXd chosen =
          dec == Decision::Mission ? *mc_out : *bc_out;
      latch = clamp_to_box(chosen, sys.input_bounds);
      rec.latched = true;
      boot_cycle = k;
      sample_prev2 = sample_prev;
      sample_prev = sample;
    } else {
      // Watchdog fires at the boundary: full restart, actuator holds.
      rec.restart = true;
      ++trace.restarts;
      advance(tau_r, &cycle_safe);
      boot_cycle = 0;
      sample_prev.reset();
      sample_prev2.reset();
    }
    rec.u_applied = latch;
    rec.t_end = t;
    rec.safe = cycle_safe;
    trace.cycles.push_back(std::move(rec));
  }

  trace.x_final = x;
  trace.t_final = t;
  return trace;
}

void write_trace_csv(const std::string& path, const SimTrace& trace) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  char buf[64];
  std::snprintf(buf, sizeof buf, "# config-hash=%016llx\n",
                static_cast<unsigned long long>(trace.config_hash));
  f << buf;

  const auto vec_cols = [&f](const char* stem, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) f << ',' << stem << i;
  };
  const Eigen::Index nx =
      trace.cycles.empty() ? 0 : trace.cycles.front().x_sample.size();
  const Eigen::Index nu =
      trace.cycles.empty() ? 0 : trace.cycles.front().u_applied.size();
  f << "t,k_global,k_boot";
  vec_cols("x", nx);
  vec_cols("u_mc", nu);
  vec_cols("u_bc", nu);
  f << ",decision,latched";
  vec_cols("u_app", nu);
  f << ",restart,fault,note,safe\n";

  const auto put_vec = [&](const Eigen::VectorXd& v, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i < v.size()) {
        std::snprintf(buf, sizeof buf, ",%.12g", v(i));
        f << buf;
      } else {
        f << ',';
      }
    }
  };

  for (const auto& rec : trace.cycles) {
    std::snprintf(buf, sizeof buf, "%.9f,%llu,%d", rec.t_end,
                  static_cast<unsigned long long>(rec.global_cycle),
                  rec.boot_cycle);
    f << buf;
    put_vec(rec.x_sample, nx);
    put_vec(rec.u_mc, nu);
    put_vec(rec.u_bc, nu);
    f << ',' << (rec.decision == Decision::Mission ? "MC" : "BC");
    f << ',' << (rec.latched ? 1 : 0);
    put_vec(rec.u_applied, nu);
    f << ',' << (rec.restart ? 1 : 0);
    f << ',' << rec.fault << ',' << rec.note << ',' << (rec.safe ? 1 : 0)
      << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace rctl
