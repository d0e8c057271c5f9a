#include "config.hpp"

#include <fstream>
#include <set>

namespace memsim::cli {

using nlohmann::json;
using memcell::ConfigError;

namespace {

class Reader {
 public:
  Reader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(prefix_.empty() ? "config" : prefix_, "must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key), "has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string path(const char* key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(path(key.c_str()), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

device::MosParams mos_from_json(const json& j, device::MosParams p) {
  Reader r(j, "switch_params");
  r.get("mu0", p.mu0);
  r.get("tox", p.tox);
  r.get("w_eff", p.w_eff);
  r.get("l_eff", p.l_eff);
  r.get("vt0", p.vt0);
  r.get("gamma", p.gamma);
  r.get("phi_f_abs2", p.phi_f_abs2);
  r.get("lambda", p.lambda);
  std::string polarity = p.polarity == device::Polarity::kNmos ? "nmos" : "pmos";
  r.get("polarity", polarity);
  if (polarity == "nmos") {
    p.polarity = device::Polarity::kNmos;
  } else if (polarity == "pmos") {
    p.polarity = device::Polarity::kPmos;
  } else {
    throw ConfigError("switch_params.polarity", "must be nmos or pmos");
  }
  r.finish();
  return p;
}

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  memcell::CellConfig& c = cfg.cell;
  Reader r(j, "");
  r.get("c_primary", c.c_primary);
  r.get("c_secondary", c.c_secondary);
  r.get("r0", c.r0);
  r.get("r1", c.r1);
  r.get("supply_rail", c.supply_rail);
  r.get("control_high", c.control_high);
  r.get("refresh_period", c.refresh_period);
  r.get("storage_time", c.storage_time);
  r.get("frame_rate", c.frame_rate);
  r.get("seed", cfg.seed);
  if (const json* sw = r.child("switch_params")) {
    c.switch_params = mos_from_json(*sw, c.switch_params);
  }
  if (const json* leak = r.child("leak")) {
    Reader lr(*leak, "leak");
    lr.get("g0", c.leak.g0);
    lr.get("g1", c.leak.g1);
    lr.finish();
  }
  if (const json* pw = r.child("pulse_widths")) {
    Reader pr(*pw, "pulse_widths");
    pr.get("write", c.pulses.write);
    pr.get("vin_window", c.pulses.vin_window);
    pr.get("transfer", c.pulses.transfer);
    pr.get("amplify", c.pulses.amplify);
    pr.get("refresh", c.pulses.refresh);
    pr.get("guard", c.pulses.guard);
    pr.get("edge", c.pulses.edge);
    pr.finish();
  }
  if (const json* s = r.child("solver")) {
    Reader sr(*s, "solver");
    sr.get("fine_dt", cfg.solver.fine_dt);
    sr.get("max_dt", cfg.solver.max_dt);
    sr.get("event_guard", cfg.solver.event_guard);
    sr.get("tol", cfg.solver.newton.tol);
    sr.get("max_iterations", cfg.solver.newton.max_iterations);
    sr.get("max_update", cfg.solver.newton.max_update);
    sr.finish();
    if (!(cfg.solver.fine_dt > 0.0) || !(cfg.solver.max_dt >= cfg.solver.fine_dt)) {
      throw ConfigError("solver", "need 0 < fine_dt <= max_dt");
    }
    if (!(cfg.solver.newton.tol > 0.0) || cfg.solver.newton.max_iterations < 1) {
      throw ConfigError("solver", "need tol > 0 and max_iterations >= 1");
    }
  }
  r.finish();
  c.validate();
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  const memcell::CellConfig& c = cfg.cell;
  const device::MosParams& p = c.switch_params;
  return json{
      {"c_primary", c.c_primary},
      {"c_secondary", c.c_secondary},
      {"r0", c.r0},
      {"r1", c.r1},
      {"supply_rail", c.supply_rail},
      {"control_high", c.control_high},
      {"switch_params",
       {{"mu0", p.mu0}, {"tox", p.tox}, {"w_eff", p.w_eff}, {"l_eff", p.l_eff},
        {"vt0", p.vt0}, {"gamma", p.gamma}, {"phi_f_abs2", p.phi_f_abs2},
        {"lambda", p.lambda},
        {"polarity", p.polarity == device::Polarity::kNmos ? "nmos" : "pmos"}}},
      {"leak", {{"g0", c.leak.g0}, {"g1", c.leak.g1}}},
      {"pulse_widths",
       {{"write", c.pulses.write}, {"vin_window", c.pulses.vin_window},
        {"transfer", c.pulses.transfer}, {"amplify", c.pulses.amplify},
        {"refresh", c.pulses.refresh}, {"guard", c.pulses.guard},
        {"edge", c.pulses.edge}}},
      {"refresh_period", c.refresh_period},
      {"storage_time", c.storage_time},
      {"frame_rate", c.frame_rate},
      {"solver",
       {{"fine_dt", cfg.solver.fine_dt}, {"max_dt", cfg.solver.max_dt},
        {"event_guard", cfg.solver.event_guard}, {"tol", cfg.solver.newton.tol},
        {"max_iterations", cfg.solver.newton.max_iterations},
        {"max_update", cfg.solver.newton.max_update}}},
      {"seed", cfg.seed},
  };
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

json fit_report_to_json(const calib::FitReport& report) {
  return json{
      {"leak", {{"g0", report.leak.g0}, {"g1", report.leak.g1}}},
      {"decay_rates",
       {{"g0_over_c", report.leak.g0 / report.capacitance},
        {"g1_over_c", report.leak.g1 / report.capacitance}}},
      {"capacitance", report.capacitance},
      {"dt", report.dt},
      {"weight_exponent", report.weight_exponent},
      {"iterations", report.iterations},
      {"residuals", report.residuals},
      {"max_abs_residual", report.max_abs_residual},
  };
}

LeakModel leak_from_json(const json& j) {
  const json& leak = j.contains("leak") ? j.at("leak") : j;
  LeakModel m;
  try {
    m.g0 = leak.at("g0").get<double>();
    m.g1 = leak.at("g1").get<double>();
  } catch (const json::exception&) {
    throw ConfigError("leak", "expected numeric g0 and g1");
  }
  m.validate();
  return m;
}

LeakModel load_leak(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("leak", "cannot open calibration " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("leak", std::string("invalid JSON: ") + e.what());
  }
  return leak_from_json(j);
}

}  // namespace memsim::cli
