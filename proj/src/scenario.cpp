#include "restartctl/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace rctl {

std::uint64_t fnv1a_hash(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool KvFile::has(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return true;
  return false;
}

const std::vector<std::string>& KvFile::get(const std::string& key) const {
  for (const auto& [k, v] : entries)
    if (k == key) return v;
  throw ConfigError("missing key: " + key);
}

std::string KvFile::get_str(const std::string& key) const {
  const auto& v = get(key);
  if (v.size() != 1) throw ConfigError("key expects one value: " + key);
  return v[0];
}

std::string KvFile::get_str_or(const std::string& key,
                               const std::string& dflt) const {
  return has(key) ? get_str(key) : dflt;
}

namespace {

double to_num(const std::string& s, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("bad number '" + s + "' for key: " + key);
  }
  if (used != s.size() || !std::isfinite(v))
    throw ConfigError("bad number '" + s + "' for key: " + key);
  return v;
}

}  // namespace

double KvFile::get_num(const std::string& key) const {
  return to_num(get_str(key), key);
}

double KvFile::get_num_or(const std::string& key, double dflt) const {
  return has(key) ? get_num(key) : dflt;
}

std::vector<double> KvFile::get_nums(const std::string& key) const {
  const auto& v = get(key);
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& s : v) out.push_back(to_num(s, key));
  return out;
}

KvFile parse_kv_file(const std::string& path, const std::string& header) {
  const std::string text = read_text_file(path);
  KvFile kv;
  kv.hash = fnv1a_hash(text);

  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header)
    throw ConfigError(path + ": expected header '" + header + "'");

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line.resize(hash_pos);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    std::vector<std::string> vals;
    std::string tok;
    while (ls >> tok) vals.push_back(tok);
    if (key != "fault") {
      for (const auto& [k, v] : kv.entries)
        if (k == key)
          throw ConfigError(path + ":" + std::to_string(line_no) +
                            ": duplicate key '" + key + "'");
    }
    kv.entries.emplace_back(std::move(key), std::move(vals));
  }
  return kv;
}

SynthConfig load_synth_config(const std::string& path) {
  const KvFile kv = parse_kv_file(path, "# rctl-synth v1");
  SynthConfig sc;
  sc.hash = kv.hash;
  sc.mode = kv.get_str("mode");
  if (sc.mode != "grid" && sc.mode != "linear")
    throw ConfigError(path + ": mode must be grid or linear");
  sc.plant = kv.get_str("plant");
  sc.tau_c = kv.get_num("tau_c");
  sc.m = int(kv.get_num("m"));
  sc.step_h = kv.get_num_or("step_h", sc.tau_c / 50.0);
  if (!(sc.tau_c > 0.0) || sc.m < 1 || !(sc.step_h > 0.0))
    throw ConfigError(path + ": bad schedule parameters");

  if (sc.mode == "grid") {
    const auto eta = kv.get_nums("eta");
    sc.eta = Eigen::Map<const Eigen::VectorXd>(eta.data(),
                                               Eigen::Index(eta.size()));
    if (sc.eta.size() == 0 || sc.eta.minCoeff() <= 0.0)
      throw ConfigError(path + ": eta must be positive");
    const auto counts = kv.get_nums("input_counts");
    sc.input_counts.resize(Eigen::Index(counts.size()));
    for (std::size_t i = 0; i < counts.size(); ++i) {
      sc.input_counts(Eigen::Index(i)) = int(counts[i]);
      if (counts[i] < 1) throw ConfigError(path + ": input_counts must be >= 1");
    }
    sc.margin_pairs = std::uint64_t(kv.get_num_or("margin_pairs", 0));
  } else {
    sc.p_max = int(kv.get_num_or("p_max", 64));
    if (sc.p_max < 1) throw ConfigError(path + ": p_max must be >= 1");
  }
  return sc;
}

namespace {

// Resolves the plant key into dynamics, safe set, and mission controller;
// the helicopter model is kept when the plant came from a file.
struct PlantBundle {
  ControlSystem sys;
  HPolytope safe;
  MissionFn mc;
  std::optional<HelicopterModel> hm;
  std::string name;
};

PlantBundle resolve_plant(const std::string& plant) {
  PlantBundle pb;
  if (plant == "pendulum") {
    pb.sys = pendulum_system();
    pb.safe = pendulum_safe_set();
    pb.mc = [](const Eigen::VectorXd& x) { return pendulum_mc(x); };
    pb.name = pb.sys.name;
    return pb;
  }
  HelicopterModel hm = load_helicopter(plant);
  pb.sys = linear_as_control_system(hm.sys);
  pb.safe = hm.safe_x;
  const Eigen::MatrixXd K = hm.mc_gain;
  const Eigen::VectorXd sp = hm.mc_setpoint;
  const HyperInterval ub = hm.sys.input_bounds;
  pb.mc = [K, sp, ub](const Eigen::VectorXd& x) {
    Eigen::VectorXd u = K * (sp - x);
    for (Eigen::Index i = 0; i < u.size(); ++i)
      u(i) = std::clamp(u(i), ub.lower(i), ub.upper(i));
    return u;
  };
  pb.name = hm.sys.name;
  pb.hm = std::move(hm);
  return pb;
}

}  // namespace

SafetyMonitor LoadedScenario::make_monitor() const {
  SafetyMonitor mon;
  if (ctl) mon.grid_ctl = &*ctl;
  if (region) mon.region = &*region;
  mon.safe = safe;
  return mon;
}

std::unique_ptr<LoadedScenario> load_scenario(const std::string& path) {
  const KvFile kv = parse_kv_file(path, "# rctl-scenario v1");
  auto sc = std::make_unique<LoadedScenario>();
  sc->hash = kv.hash;

  PlantBundle pb = resolve_plant(kv.get_str("plant"));
  sc->plant_name = pb.name;
  sc->sys = std::move(pb.sys);
  sc->safe = canonicalized(pb.safe);
  sc->mc = std::move(pb.mc);

  sc->sim.sched.tau_c = kv.get_num("tau_c");
  sc->sim.sched.m = int(kv.get_num("m"));
  sc->sim.sched.epsilon = kv.get_num_or("epsilon", 0.0);
  validate_schedule(sc->sim.sched);
  sc->sim.step_h = kv.get_num_or("step_h", sc->sim.sched.tau_c / 50.0);
  sc->sim.cycles = std::uint64_t(kv.get_num("cycles"));
  sc->sim.config_hash = kv.hash;

  const auto x0 = kv.get_nums("x0");
  sc->sim.x0 = Eigen::Map<const Eigen::VectorXd>(x0.data(),
                                                 Eigen::Index(x0.size()));
  if (sc->sim.x0.size() != sc->sys.state_dim)
    throw ConfigError(path + ": x0 dimension mismatch");
  sc->sim.init_cmd = kv.get_str_or("init_cmd", "bc");
  if (kv.has("init_u")) {
    const auto iu = kv.get_nums("init_u");
    sc->sim.init_u = Eigen::Map<const Eigen::VectorXd>(iu.data(),
                                                       Eigen::Index(iu.size()));
  }

  const bool has_ctl = kv.has("controller");
  const bool has_region = kv.has("region");
  if (has_ctl == has_region)
    throw ConfigError(path + ": exactly one of controller/region required");

  if (has_ctl) {
    sc->ctl = load_controller(kv.get_str("controller"));
    if (sc->ctl->plant != sc->plant_name)
      throw ConfigError(path + ": controller was synthesized for plant '" +
                        sc->ctl->plant + "'");
    if (std::abs(sc->ctl->tau_c - sc->sim.sched.tau_c) > 1e-12 ||
        std::abs(sc->ctl->tau_r - sc->sim.sched.tau_r()) > 1e-12)
      throw ConfigError(path + ": controller schedule mismatch");
    const RefinedController* ctl = &*sc->ctl;
    sc->bc = [ctl](const Eigen::VectorXd& x) -> std::optional<Eigen::VectorXd> {
      const auto cell = ctl->grid.quantize(x);
      if (!cell) return std::nullopt;
      const auto j = ctl->choose_input(*cell);
      if (!j) return std::nullopt;
      return ctl->inputs[*j];
    };
  } else {
    if (!pb.hm)
      throw ConfigError(path + ": region route needs a linear plant file");
    sc->region = load_polytope(kv.get_str("region"));
    if (sc->region->dim() != sc->sys.state_dim)
      throw ConfigError(path + ": region dimension mismatch");
    const DiscreteLinear d = discretize(pb.hm->sys, sc->sim.sched.tau_c);
    sc->bc_lin = BcLinear{*sc->region, helicopter_input_poly(*pb.hm), d,
                          horizon_matrices(d, sc->sim.sched.m)};
    const BcLinear* bl = &*sc->bc_lin;
    sc->bc = [bl](const Eigen::VectorXd& x) { return bl->choose(x); };
  }

  const std::uint64_t base_seed = std::uint64_t(kv.get_num_or("seed", 1));
  std::size_t fault_no = 0;
  for (const auto& [key, vals] : kv.entries) {
    if (key != "fault") continue;
    ++fault_no;
    if (vals.size() < 3)
      throw ConfigError(path + ": fault needs kind, first and last cycle");
    FaultSpec spec;
    const auto kind = fault_from_name(vals[0]);
    if (!kind) throw ConfigError(path + ": unknown fault kind '" + vals[0] + "'");
    spec.kind = *kind;
    spec.first_cycle = std::uint64_t(to_num(vals[1], "fault"));
    spec.last_cycle = std::uint64_t(to_num(vals[2], "fault"));
    spec.seed = base_seed + fault_no;
    for (std::size_t i = 3; i + 1 < vals.size(); i += 2) {
      if (vals[i] == "rate") spec.rate = to_num(vals[i + 1], "fault rate");
      else if (vals[i] == "gain") spec.gain = to_num(vals[i + 1], "fault gain");
      else if (vals[i] == "seed")
        spec.seed = std::uint64_t(to_num(vals[i + 1], "fault seed"));
      else throw ConfigError(path + ": unknown fault option '" + vals[i] + "'");
    }
    validate_fault(spec, sc->sim.sched.m);
    sc->faults.push_back(spec);
  }
  return sc;
}

SimTrace run_scenario_trial(const LoadedScenario& sc,
                            const std::vector<FaultSpec>& specs,
                            std::uint64_t trial, double x0_jitter,
                            std::uint64_t jitter_seed) {
  SimConfig sim = sc.sim;
  if (trial > 0 && x0_jitter > 0.0) {
    DetRng rng(jitter_seed * 0x9e3779b97f4a7c15ull + trial);
    const auto in_region = [&sc](const Eigen::VectorXd& x) {
      if (sc.ctl) {
        const auto cell = sc.ctl->grid.quantize(x);
        return cell.has_value() && sc.ctl->in_domain(*cell);
      }
      return contains_point(*sc.region, x, 1e-9);
    };
    for (int attempt = 0; attempt < 100; ++attempt) {
      Eigen::VectorXd cand = sc.sim.x0;
      for (Eigen::Index i = 0; i < cand.size(); ++i)
        cand(i) += rng.uniform(-x0_jitter, x0_jitter);
      if (in_region(cand)) {
        sim.x0 = cand;
        break;
      }
    }
  }
  const SafetyMonitor mon = sc.make_monitor();
  FaultInjector inject(specs, sc.sim.sched.m, &sc.sys, sc.safe);
  return run_simulation(sc.sys, mon, sc.mc, sc.bc, sim,
                        [&inject](std::uint64_t g, int k) { return inject(g, k); });
}

CampaignFile load_campaign_config(const std::string& path) {
  const KvFile kv = parse_kv_file(path, "# rctl-campaign v1");
  CampaignFile cf;
  cf.hash = kv.hash;
  cf.scenario_path = kv.get_str("scenario");
  cf.cfg.trials = std::uint64_t(kv.get_num_or("trials", 5));
  cf.cfg.cycles = std::uint64_t(kv.get_num_or("cycles", 120));
  cf.cfg.activation_cycle = std::uint64_t(kv.get_num_or("activation", 40));
  cf.cfg.app_fault_window = std::uint64_t(kv.get_num_or("app_window", 10));
  cf.cfg.degraded_gain = kv.get_num_or("gain", 0.5);
  cf.cfg.seed = std::uint64_t(kv.get_num_or("seed", 1));
  cf.cfg.config_hash = kv.hash;
  cf.x0_jitter = kv.get_num_or("x0_jitter", 0.0);
  if (kv.has("kinds")) {
    for (const auto& name : kv.get("kinds")) {
      const auto k = fault_from_name(name);
      if (!k) throw ConfigError(path + ": unknown fault kind '" + name + "'");
      cf.kinds.push_back(*k);
    }
  } else {
    cf.kinds.assign(std::begin(kAllFaultKinds), std::end(kAllFaultKinds));
  }
  return cf;
}

}  // namespace rctl
