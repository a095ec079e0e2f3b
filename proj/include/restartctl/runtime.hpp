// runtime.hpp — deterministic cycle-accurate simulator of the restart-
// tolerant control stack. Each control cycle runs, in order: mission
// controller (on the previous sample), decision module (on the one-cycle
// state prediction), plant to the sensor instant, base controller (on the
// fresh sample), flushing task and watchdog at the cycle boundary, plant
// through the boundary. A missing decision or base command trips the
// watchdog, which restarts the whole computer: the actuator holds its last
// value for tau_r, software memory clears, and the first cycle after boot
// always applies the base controller.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "restartctl/invariant_linear.hpp"
#include "restartctl/reach.hpp"
#include "restartctl/synthesis.hpp"

namespace rctl {

struct CycleSchedule {
  double tau_c = 0.0;
  int m = 1;              // restart length in cycles
  double epsilon = 0.0;   // sensor lead before the boundary; default tau_c/100

  double tau_r() const { return m * tau_c; }
  double lead() const { return epsilon > 0.0 ? epsilon : tau_c / 100.0; }
};
void validate_schedule(const CycleSchedule& s);

enum class Decision { Mission, Base };

// Per-cycle fault effects, produced by an injector hook. Absent hook or
// default-constructed value = healthy cycle.
struct FaultActions {
  bool mc_no_output = false;
  double mc_gain = 1.0;
  bool mc_stale = false;
  // Replaces the mission command as a function of the software-visible state.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> mc_override;
  bool suppress_bc = false;
  bool suppress_flush = false;
  bool suppress_all = false;
  bool force_reboot = false;
  std::string tag;
};

using FaultHook =
    std::function<FaultActions(std::uint64_t global_cycle, int boot_cycle)>;
using MissionFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using BaseFn =
    std::function<std::optional<Eigen::VectorXd>(const Eigen::VectorXd&)>;

// The decision module's view of the invariant region: exactly one of the two
// representations is set. `safe` is the safe-set polytope for the tube test.
struct SafetyMonitor {
  const RefinedController* grid_ctl = nullptr;
  const HPolytope* region = nullptr;
  HPolytope safe;
  int tube_segments = 8;
};

// The three containment checks on the predicted state: reach at tau_c and at
// tau_r + tau_c inside the invariant region, the whole tube inside the safe
// set. Any overflow or out-of-bounds command conservatively rejects.
bool dm_accepts(const ControlSystem& sys, const SafetyMonitor& mon,
                const CycleSchedule& sched, double h,
                const Eigen::VectorXd& x_prev, const Eigen::VectorXd& u_prev,
                const Eigen::VectorXd& u_mc);

struct CycleRecord {
  double t_end = 0.0;              // boundary instant closing this cycle
  std::uint64_t global_cycle = 0;  // 1-based, never resets
  int boot_cycle = 0;              // k, resets to 1 after each restart
  Eigen::VectorXd x_sample;        // sensor sample at t_end - epsilon
  Eigen::VectorXd u_mc;            // size 0 when the stage produced nothing
  Eigen::VectorXd u_bc;            // size 0 when the stage produced nothing
  Decision decision = Decision::Base;
  bool latched = false;            // flushing task wrote the command
  Eigen::VectorXd u_applied;       // actuator value after the boundary
  bool restart = false;            // watchdog fired at this boundary
  std::string fault;               // injected fault tag, empty when healthy
  std::string note;                // anomaly notes (e.g. sample left domain)
  bool safe = true;                // dense trajectory stayed in S this cycle
};

struct SimTrace {
  std::vector<CycleRecord> cycles;
  std::uint64_t restarts = 0;
  bool safety_violation = false;
  double first_violation_time = -1.0;  // negative = none
  Eigen::VectorXd x_final;
  double t_final = 0.0;
  std::uint64_t config_hash = 0;
};

struct SimConfig {
  CycleSchedule sched;
  double step_h = 0.0;       // integration mesh width
  std::uint64_t cycles = 0;  // number of control cycles to simulate
  Eigen::VectorXd x0;
  std::string init_cmd = "bc";  // bc | zero | given
  Eigen::VectorXd init_u;       // used by init_cmd = given
  std::uint64_t config_hash = 0;
};

// Deterministic end-to-end run. Configuration problems (x0 outside the
// region, bad schedule) throw before the first cycle; afterwards anomalies
// only become trace events.
SimTrace run_simulation(const ControlSystem& sys, const SafetyMonitor& mon,
                        const MissionFn& mc, const BaseFn& bc,
                        const SimConfig& cfg,
                        const FaultHook& faults = nullptr);

// Columns: t, k_global, k_boot, x..., u_mc..., u_bc..., decision, latched,
// u_applied..., restart, fault, note, safe.
void write_trace_csv(const std::string& path, const SimTrace& trace);

}  // namespace rctl
