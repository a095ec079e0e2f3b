#include "restartctl/faults.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rctl {

const char* fault_name(FaultKind k) {
  switch (k) {
    case FaultKind::NoOutput: return "NoOutput";
    case FaultKind::MaximumVoltage: return "MaximumVoltage";
    case FaultKind::TimeDegradedControl: return "TimeDegradedControl";
    case FaultKind::TimingFaultCpu: return "TimingFaultCpu";
    case FaultKind::TimingFaultResource: return "TimingFaultResource";
    case FaultKind::RtosFreeze: return "RtosFreeze";
    case FaultKind::ComputerReboot: return "ComputerReboot";
  }
  return "?";
}

std::optional<FaultKind> fault_from_name(std::string_view name) {
  for (FaultKind k : kAllFaultKinds)
    if (name == fault_name(k)) return k;
  return std::nullopt;
}

bool fault_restarts(FaultKind k) { return is_system_level(k); }

bool is_system_level(FaultKind k) {
  switch (k) {
    case FaultKind::NoOutput:
    case FaultKind::MaximumVoltage:
    case FaultKind::TimeDegradedControl:
      return false;
    case FaultKind::TimingFaultCpu:
    case FaultKind::TimingFaultResource:
    case FaultKind::RtosFreeze:
    case FaultKind::ComputerReboot:
      return true;
  }
  return false;
}

void validate_fault(const FaultSpec& spec, int m) {
  if (spec.first_cycle < 1 || spec.last_cycle < spec.first_cycle)
    throw std::invalid_argument("fault: bad activation window");
  if (!(spec.rate >= 0.0 && spec.rate <= 1.0))
    throw std::invalid_argument("fault: rate outside [0, 1]");
  if (!(spec.gain > 0.0 && spec.gain <= 1.0))
    throw std::invalid_argument("fault: gain outside (0, 1]");
  if (is_system_level(spec.kind) && spec.rate == 0.0 &&
      spec.first_cycle <= std::uint64_t(m))
    throw std::invalid_argument(
        "fault: system-level activation inside the initial protected window");
}

Eigen::VectorXd max_voltage_override(const ControlSystem& sys,
                                     const HPolytope& safe,
                                     const Eigen::VectorXd& x) {
  const HPolytope cs = canonicalized(safe);
  Eigen::Index nearest = 0;
  double best_slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < cs.rows(); ++i) {
    const double slack = cs.b(i) - cs.A.row(i).dot(x);
    if (slack < best_slack) {
      best_slack = slack;
      nearest = i;
    }
  }
  const Eigen::VectorXd a = cs.A.row(nearest).transpose();

  const auto verts = sys.input_bounds.vertices();
  Eigen::VectorXd dx(sys.state_dim);
  Eigen::VectorXd best = verts.front();
  double best_push = -std::numeric_limits<double>::infinity();
  for (const auto& v : verts) {
    sys.eval(x, v, dx);
    const double push = a.dot(dx);
    if (push > best_push) {
      best_push = push;
      best = v;
    }
  }
  return best;
}

FaultInjector::FaultInjector(std::vector<FaultSpec> specs, int m,
                             const ControlSystem* sys, HPolytope safe)
    : m_(m), sys_(sys), safe_(canonicalized(safe)) {
  for (auto& s : specs) {
    validate_fault(s, m);
    armed_.push_back(Armed{s, DetRng(s.seed)});
  }
  if (sys_ == nullptr) throw std::invalid_argument("fault injector: no plant");
}

FaultActions FaultInjector::operator()(std::uint64_t global_cycle,
                                       int boot_cycle) {
  FaultActions fa;
  for (auto& arm : armed_) {
    const FaultSpec& s = arm.spec;
    if (global_cycle < s.first_cycle || global_cycle > s.last_cycle) continue;
    // The Bernoulli draw is consumed for every window cycle so the sequence
    // does not depend on restart history.
    bool active = true;
    if (s.rate > 0.0) active = arm.rng.uniform01() < s.rate;
    if (!active) continue;
    if (is_system_level(s.kind) && boot_cycle <= m_) continue;

    switch (s.kind) {
      case FaultKind::NoOutput:
        fa.mc_no_output = true;
        break;
      case FaultKind::MaximumVoltage: {
        const ControlSystem* sys = sys_;
        const HPolytope* safe = &safe_;
        fa.mc_override = [sys, safe](const Eigen::VectorXd& x) {
          return max_voltage_override(*sys, *safe, x);
        };
        break;
      }
      case FaultKind::TimeDegradedControl:
        fa.mc_gain = s.gain;
        fa.mc_stale = true;
        break;
      case FaultKind::TimingFaultCpu:
        fa.suppress_bc = true;
        break;
      case FaultKind::TimingFaultResource:
        fa.suppress_flush = true;
        break;
      case FaultKind::RtosFreeze:
        fa.suppress_all = true;
        break;
      case FaultKind::ComputerReboot:
        fa.force_reboot = true;
        break;
    }
    if (!fa.tag.empty()) fa.tag += '+';
    fa.tag += fault_name(s.kind);
  }
  return fa;
}

CampaignResult run_campaign(const TrialRunner& runner,
                            const std::vector<FaultKind>& kinds,
                            const CampaignConfig& cfg, int m) {
  if (!runner) throw std::invalid_argument("campaign: missing trial runner");
  if (cfg.trials == 0 || cfg.cycles == 0)
    throw std::invalid_argument("campaign: zero trials or cycles");
  if (cfg.activation_cycle <= std::uint64_t(m))
    throw std::invalid_argument(
        "campaign: activation must clear the initial protected window");
  if (cfg.activation_cycle > cfg.cycles)
    throw std::invalid_argument("campaign: activation beyond the horizon");

  CampaignResult res;
  res.config_hash = cfg.config_hash;
  for (std::size_t ki = 0; ki < kinds.size(); ++ki) {
    const FaultKind kind = kinds[ki];
    CampaignRow row;
    row.kind = kind;
    row.trials = cfg.trials;
    row.expected_restart = fault_restarts(kind);

    double recovery_sum = 0.0;
    std::uint64_t recovery_n = 0;
    for (std::uint64_t trial = 0; trial < cfg.trials; ++trial) {
      FaultSpec spec;
      spec.kind = kind;
      spec.first_cycle = cfg.activation_cycle;
      spec.last_cycle = is_system_level(kind)
                            ? cfg.activation_cycle
                            : cfg.activation_cycle + cfg.app_fault_window - 1;
      spec.gain = cfg.degraded_gain;
      spec.seed = cfg.seed * 1000003 + trial * 7919 + ki;

      const SimTrace trace = runner({spec}, trial);
      row.restarts += trace.restarts;
      if (trace.restarts > 0) ++row.trials_with_restart;
      if (trace.safety_violation) ++row.violations;

      for (const auto& rec : trace.cycles) {
        if (rec.global_cycle <= spec.last_cycle) continue;
        if (rec.decision == Decision::Mission) {
          recovery_sum += double(rec.global_cycle - cfg.activation_cycle);
          ++recovery_n;
          break;
        }
      }
    }
    if (recovery_n > 0) row.mean_recovery_cycles = recovery_sum / recovery_n;

    const bool restart_ok =
        row.expected_restart
            ? (row.trials_with_restart == row.trials &&
               row.restarts == row.trials)
            : row.restarts == 0;
    row.conforms = restart_ok && row.violations == 0;
    if (!row.conforms) res.all_conform = false;
    res.rows.push_back(row);
  }
  return res;
}

void write_campaign_csv(const std::string& path, const CampaignResult& res) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  char buf[64];
  std::snprintf(buf, sizeof buf, "# config-hash=%016llx\n",
                static_cast<unsigned long long>(res.config_hash));
  f << buf;
  f << "fault,trials,restarts,trials_with_restart,violations,"
       "expected_restart,conforms,mean_recovery_cycles\n";
  for (const auto& row : res.rows) {
    f << fault_name(row.kind) << ',' << row.trials << ',' << row.restarts
      << ',' << row.trials_with_restart << ',' << row.violations << ','
      << (row.expected_restart ? "Yes" : "No") << ','
      << (row.conforms ? 1 : 0) << ',';
    std::snprintf(buf, sizeof buf, "%.3f\n", row.mean_recovery_cycles);
    f << buf;
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string format_campaign_table(const CampaignResult& res) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-22s %7s %9s %11s %9s %8s\n", "fault",
                "trials", "restarts", "expected", "violations", "conform");
  out << line;
  for (const auto& row : res.rows) {
    std::snprintf(line, sizeof line, "%-22s %7llu %9llu %11s %9llu %8s\n",
                  fault_name(row.kind),
                  static_cast<unsigned long long>(row.trials),
                  static_cast<unsigned long long>(row.restarts),
                  row.expected_restart ? "Yes" : "No",
                  static_cast<unsigned long long>(row.violations),
                  row.conforms ? "yes" : "NO");
    out << line;
  }
  out << (res.all_conform ? "campaign: all rows conform\n"
                          : "campaign: CONFORMANCE FAILURE\n");
  return out.str();
}

}  // namespace rctl
