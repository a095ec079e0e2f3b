// scenario.hpp — text configuration files and their assembly into runnable
// objects. Three formats, all line-oriented key-value with a version header:
// synthesis configs, simulation scenarios, and fault campaigns. Every parsed
// file carries an FNV-1a hash of its bytes, which the tools stamp into their
// outputs for provenance.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "restartctl/faults.hpp"
#include "restartctl/runtime.hpp"

namespace rctl {

std::uint64_t fnv1a_hash(std::string_view bytes);
std::string read_text_file(const std::string& path);

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Key-value config: one entry per line, key first, values after; '#' starts
// a comment except for the mandatory first header line. Keys other than
// "fault" may not repeat.
struct KvFile {
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;
  std::uint64_t hash = 0;

  bool has(const std::string& key) const;
  const std::vector<std::string>& get(const std::string& key) const;
  std::string get_str(const std::string& key) const;
  std::string get_str_or(const std::string& key, const std::string& dflt) const;
  double get_num(const std::string& key) const;
  double get_num_or(const std::string& key, double dflt) const;
  std::vector<double> get_nums(const std::string& key) const;
};
KvFile parse_kv_file(const std::string& path, const std::string& header);

// --- synthesis configs (header "# rctl-synth v1") ---
struct SynthConfig {
  std::string mode;   // "grid" or "linear"
  std::string plant;  // "pendulum" or a plant-file path
  double tau_c = 0.05;
  int m = 5;
  double step_h = 0.001;
  // grid mode
  Eigen::VectorXd eta;
  Eigen::VectorXi input_counts;
  std::uint64_t margin_pairs = 0;  // 0 = every candidate pair
  // linear mode
  int p_max = 64;
  std::uint64_t hash = 0;
};
SynthConfig load_synth_config(const std::string& path);

// --- simulation scenarios (header "# rctl-scenario v1") ---
// Heap-allocated and address-stable: the controller closures and the safety
// monitor point into the owning object.
struct LoadedScenario {
  std::string plant_name;
  ControlSystem sys;
  HPolytope safe;  // canonicalized safe set
  std::optional<RefinedController> ctl;  // grid route
  std::optional<HPolytope> region;       // linear route
  std::optional<BcLinear> bc_lin;
  MissionFn mc;
  BaseFn bc;
  SimConfig sim;
  std::vector<FaultSpec> faults;
  std::uint64_t hash = 0;

  SafetyMonitor make_monitor() const;
};
std::unique_ptr<LoadedScenario> load_scenario(const std::string& path);

// One simulation of the scenario with the given fault specs; trial > 0
// perturbs the initial state inside the region with a deterministic draw.
SimTrace run_scenario_trial(const LoadedScenario& sc,
                            const std::vector<FaultSpec>& specs,
                            std::uint64_t trial, double x0_jitter,
                            std::uint64_t jitter_seed);

// --- campaigns (header "# rctl-campaign v1") ---
struct CampaignFile {
  std::string scenario_path;
  CampaignConfig cfg;
  std::vector<FaultKind> kinds;  // defaults to all seven
  double x0_jitter = 0.0;
  std::uint64_t hash = 0;
};
CampaignFile load_campaign_config(const std::string& path);

}  // namespace rctl
