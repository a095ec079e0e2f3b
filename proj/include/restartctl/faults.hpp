// faults.hpp — declarative fault injection. Application faults corrupt the
// mission controller's output and must ride through without a restart;
// system faults kill the protected stages and must produce exactly one
// watchdog restart each. A campaign crosses fault kinds with trials and
// checks both patterns plus end-to-end safety.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "restartctl/rng.hpp"
#include "restartctl/runtime.hpp"

namespace rctl {

enum class FaultKind {
  NoOutput,
  MaximumVoltage,
  TimeDegradedControl,
  TimingFaultCpu,
  TimingFaultResource,
  RtosFreeze,
  ComputerReboot,
};

inline constexpr FaultKind kAllFaultKinds[] = {
    FaultKind::NoOutput,          FaultKind::MaximumVoltage,
    FaultKind::TimeDegradedControl, FaultKind::TimingFaultCpu,
    FaultKind::TimingFaultResource, FaultKind::RtosFreeze,
    FaultKind::ComputerReboot,
};

const char* fault_name(FaultKind k);
std::optional<FaultKind> fault_from_name(std::string_view name);

// Whether a correct stack answers this fault with a restart.
bool fault_restarts(FaultKind k);
// System-level faults are barred from the first tau_r after every boot.
bool is_system_level(FaultKind k);

struct FaultSpec {
  FaultKind kind = FaultKind::NoOutput;
  std::uint64_t first_cycle = 0;  // activation window, inclusive, 1-based
  std::uint64_t last_cycle = 0;
  double rate = 0.0;   // 0 = always active in the window; else Bernoulli
  double gain = 0.5;   // TimeDegradedControl scale factor
  std::uint64_t seed = 1;
};

// Rejects malformed windows and system-level activations that overlap the
// initial protected window (boot cycles 1..m).
void validate_fault(const FaultSpec& spec, int m);

// Turns fault specs into per-cycle actions. System-level actions falling in
// a protected window (boot cycle <= m) are dropped, honoring the fault
// model. Must be called with strictly increasing global cycles.
class FaultInjector {
 public:
  FaultInjector(std::vector<FaultSpec> specs, int m, const ControlSystem* sys,
                HPolytope safe);

  FaultActions operator()(std::uint64_t global_cycle, int boot_cycle);

 private:
  struct Armed {
    FaultSpec spec;
    DetRng rng;
  };
  std::vector<Armed> armed_;
  int m_;
  const ControlSystem* sys_;
  HPolytope safe_;
};

// The command an adversarial mission controller would emit: the input-box
// vertex pushing hardest toward the nearest safe-set boundary at x.
Eigen::VectorXd max_voltage_override(const ControlSystem& sys,
                                     const HPolytope& safe,
                                     const Eigen::VectorXd& x);

struct CampaignConfig {
  std::uint64_t trials = 5;
  std::uint64_t cycles = 120;            // horizon per trial
  std::uint64_t activation_cycle = 40;   // must exceed m
  std::uint64_t app_fault_window = 10;   // sustained length of application faults
  double degraded_gain = 0.5;
  std::uint64_t seed = 1;
  std::uint64_t config_hash = 0;
};

struct CampaignRow {
  FaultKind kind = FaultKind::NoOutput;
  std::uint64_t trials = 0;
  std::uint64_t restarts = 0;
  std::uint64_t trials_with_restart = 0;
  std::uint64_t violations = 0;
  bool expected_restart = false;
  bool conforms = false;
  double mean_recovery_cycles = -1.0;  // activation to next MC cycle; -1 = n/a
};

struct CampaignResult {
  std::vector<CampaignRow> rows;
  bool all_conform = true;
  std::uint64_t config_hash = 0;
};

// Runs one simulation for given fault specs and trial index (the runner may
// perturb the initial state per trial, deterministically).
using TrialRunner =
    std::function<SimTrace(const std::vector<FaultSpec>&, std::uint64_t trial)>;

CampaignResult run_campaign(const TrialRunner& runner,
                            const std::vector<FaultKind>& kinds,
                            const CampaignConfig& cfg, int m);

void write_campaign_csv(const std::string& path, const CampaignResult& res);
std::string format_campaign_table(const CampaignResult& res);

}  // namespace rctl
