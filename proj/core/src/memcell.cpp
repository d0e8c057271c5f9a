#include "memsim/memcell.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace memsim::memcell {

using circuit::Breakpoint;
using circuit::PwlWaveform;

device::MosParams default_switch_params() {
  return device::MosParams::with_beta(5e-4);
}

int CellConfig::cycles() const {
  return static_cast<int>(std::floor(storage_time / refresh_period + 1e-9));
}

namespace {

void positive(double v, const char* field) {
  if (!(v > 0.0)) throw ConfigError(field, "must be positive");
}

// Total length of one burst measured from its start.
double burst_length(const PulseWidths& p) {
  return 4.0 * p.edge + 3.0 * p.guard + p.transfer + p.amplify;
}

void trapezoid(std::vector<Breakpoint>& pts, double on, double off, double high,
               double edge) {
  pts.push_back({on, 0.0});
  pts.push_back({on + edge, high});
  pts.push_back({off, high});
  pts.push_back({off + edge, 0.0});
}

}  // namespace

void CellConfig::validate() const {
  positive(c_primary, "c_primary");
  positive(c_secondary, "c_secondary");
  positive(r0, "r0");
  if (!(r1 >= 0.0)) throw ConfigError("r1", "must be non-negative");
  positive(supply_rail, "supply_rail");
  positive(control_high, "control_high");
  if (control_high > 3.3) {
    throw ConfigError("control_high", "exceeds the 3.3 V process limit");
  }
  try {
    switch_params.validate();
  } catch (const std::exception& e) {
    throw ConfigError("switch_params", e.what());
  }
  try {
    leak.validate();
  } catch (const std::exception& e) {
    throw ConfigError("leak", e.what());
  }

  const PulseWidths& p = pulses;
  positive(p.edge, "pulse_widths.edge");
  positive(p.guard, "pulse_widths.guard");
  positive(p.transfer, "pulse_widths.transfer");
  positive(p.amplify, "pulse_widths.amplify");
  positive(p.refresh, "pulse_widths.refresh");
  if (p.write < 40e-9 * (1.0 - 1e-12)) {
    throw ConfigError("pulse_widths.write", "must be at least 40 ns");
  }
  if (!(p.vin_window > p.write)) {
    throw ConfigError("pulse_widths.vin_window", "must exceed the write pulse");
  }
  if (p.write <= p.edge || p.transfer <= p.edge || p.refresh <= p.edge) {
    throw ConfigError("pulse_widths", "pulses must be longer than their edges");
  }
  if (p.amplify < p.refresh + 2.0 * (p.guard + p.edge)) {
    throw ConfigError("pulse_widths.refresh", "does not fit inside the amplify window");
  }

  positive(refresh_period, "refresh_period");
  positive(frame_rate, "frame_rate");
  if (storage_time < refresh_period) {
    throw ConfigError("storage_time", "must be at least one refresh period");
  }
  if (burst_length(p) >= refresh_period) {
    throw ConfigError("refresh_period", "schedule infeasible: burst longer than period");
  }
  if (p.vin_window + p.edge >= refresh_period) {
    throw ConfigError("pulse_widths.vin_window", "write overlaps the first burst");
  }
}

ControlSchedule ControlSchedule::idle() {
  return {PwlWaveform::constant(0.0), PwlWaveform::constant(0.0),
          PwlWaveform::constant(0.0), PwlWaveform::constant(0.0),
          PwlWaveform::constant(0.0), PwlWaveform::constant(0.0),
          {},                         0.0};
}

PwlWaveform pulse(double start, double width, double high, double edge) {
  std::vector<Breakpoint> pts;
  trapezoid(pts, start, start + width, high, edge);
  return PwlWaveform(std::move(pts));
}

ControlSchedule default_schedule(const CellConfig& cfg, double vin) {
  cfg.validate();
  if (!(vin >= 0.0)) throw ConfigError("vin", "must be non-negative");

  const PulseWidths& p = cfg.pulses;
  const double high = cfg.control_high;
  const double e = p.edge;

  ControlSchedule s;
  s.frame_period = 1.0 / cfg.frame_rate;
  s.v_in = PwlWaveform({{0.0, vin}, {p.vin_window, vin}, {p.vin_window + e, 0.0}});
  s.v_write = pulse(0.0, p.write, high, e);

  std::vector<Breakpoint> transfer{{0.0, 0.0}};
  std::vector<Breakpoint> amplify{{0.0, 0.0}};
  std::vector<Breakpoint> refresh{{0.0, 0.0}};
  std::vector<Breakpoint> discharge{{0.0, high}};

  for (int k = 1; k <= cfg.cycles(); ++k) {
    Burst b{};
    b.start = k * cfg.refresh_period;
    b.transfer_on = b.start + e + p.guard;
    const double transfer_off = b.transfer_on + p.transfer;
    b.amplify_on = transfer_off + e + p.guard;
    b.amplify_off = b.amplify_on + p.amplify;
    b.refresh_on = b.amplify_on + 0.5 * (p.amplify - p.refresh);
    b.discharge_on = b.amplify_off + e + p.guard;
    b.end = b.discharge_on + e;

    discharge.push_back({b.start, high});
    discharge.push_back({b.start + e, 0.0});
    discharge.push_back({b.discharge_on, 0.0});
    discharge.push_back({b.end, high});
    trapezoid(transfer, b.transfer_on, transfer_off, high, e);
    trapezoid(amplify, b.amplify_on, b.amplify_off, high, e);
    trapezoid(refresh, b.refresh_on, b.refresh_on + p.refresh, high, e);
    s.bursts.push_back(b);
  }
  s.v_transfer = PwlWaveform(std::move(transfer));
  s.v_amplify = PwlWaveform(std::move(amplify));
  s.v_refresh = PwlWaveform(std::move(refresh));
  s.v_discharge = PwlWaveform(std::move(discharge));
  return s;
}

BuiltCell build_cell(const CellConfig& cfg, Stage stage,
                     const ControlSchedule& schedule) {
  cfg.validate();
  using namespace circuit;
  BuiltCell cell;
  cell.canonical = cfg.canonical();
  Netlist& n = cell.netlist;
  CellNodes& nodes = cell.nodes;
  const device::MosParams& sw = cfg.switch_params;

  nodes.in = n.add_node("v_in");
  nodes.primary = n.add_node("v_primary");
  n.add(VSource{nodes.in, schedule.v_in});
  n.add(MosSwitch{nodes.in, nodes.primary, sw, schedule.v_write});
  n.add(Capacitor{nodes.primary, kGround, cfg.c_primary});
  n.add(LeakageSink{nodes.primary, cfg.leak});
  if (stage == Stage::kWriteOnly) return cell;

  nodes.secondary = n.add_node("v_secondary");
  n.add(MosSwitch{nodes.primary, nodes.secondary, sw, schedule.v_transfer});
  n.add(Capacitor{nodes.secondary, kGround, cfg.c_secondary});
  n.add(LeakageSink{nodes.secondary, cfg.leak});
  if (stage == Stage::kWithTransfer) return cell;

  n.add(MosSwitch{nodes.secondary, kGround, sw, schedule.v_discharge});
  if (stage == Stage::kWithDischarge) return cell;

  nodes.amp_in = n.add_node("v_amp_in");
  nodes.out = n.add_node("v_out");
  n.add(MosSwitch{nodes.secondary, nodes.amp_in, sw, schedule.v_amplify});
  n.add(OpAmpBlock{nodes.amp_in, nodes.out, cfg.r0, cfg.r1, cfg.supply_rail});
  n.add(MosSwitch{nodes.out, nodes.primary, sw, schedule.v_refresh});
  return cell;
}

CellTrace simulate_cell(const CellConfig& cfg, double vin,
                        const circuit::StepPolicy& policy) {
  const ControlSchedule schedule = default_schedule(cfg, vin);
  BuiltCell cell = build_cell(cfg, Stage::kFull, schedule);
  const double t_stop = schedule.bursts.back().end + policy.event_guard;

  CellTrace out;
  out.nodes = cell.nodes;
  out.trace = circuit::run_transient(cell.netlist, t_stop, policy);
  for (const Burst& b : schedule.bursts) {
    const std::size_t row = out.trace.index_of_time(b.amplify_off);
    out.readouts.push_back({b.amplify_off, out.trace.at(row, cell.nodes.out)});
  }
  return out;
}

double retention(const LeakModel& leak, double c, double v0, double dt) {
  if (!(c > 0.0)) throw std::invalid_argument("retention: capacitance must be positive");
  if (!(v0 >= 0.0) || !(dt >= 0.0)) {
    throw std::invalid_argument("retention: v0 and dt must be non-negative");
  }
  const double a = leak.g0 / c;
  const double b = leak.g1 / c;
  if (v0 == 0.0 || dt == 0.0) return v0;
  if (a == 0.0) return v0 / (1.0 + b * v0 * dt);
  const double decay = std::exp(-a * dt);
  if (b == 0.0) return v0 * decay;
  const double lost = -std::expm1(-a * dt);
  return a * v0 * decay / (a + b * v0 * lost);
}

double pass_gate_limit(const device::MosParams& p, double gate_high) {
  auto excess = [&](double v) {
    return gate_high - device::threshold_voltage(p, v) - v;
  };
  if (excess(0.0) <= 0.0) return 0.0;
  double lo = 0.0;
  double hi = gate_high;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double behavioral_store(const CellConfig& cfg, double vin, int n_cycles) {
  cfg.validate();
  if (!(vin >= 0.0)) throw ConfigError("vin", "must be non-negative");
  if (n_cycles < 0) throw std::invalid_argument("behavioral_store: negative cycle count");

  const double limit = pass_gate_limit(cfg.switch_params, cfg.control_high);
  double stored = std::min(vin, limit);
  double out = stored;
  for (int k = 0; k < n_cycles; ++k) {
    const double held = retention(cfg.leak, cfg.c_primary, stored, cfg.refresh_period);
    const double shared = held * cfg.share_ratio();
    out = std::clamp(cfg.gain() * shared, -cfg.supply_rail, cfg.supply_rail);
    stored = std::min(out, limit);
  }
  return out;
}

void write_readouts_csv(std::ostream& os, const std::vector<Readout>& readouts) {
  os << "time,readout_volts\n";
  char buf[64];
  for (const Readout& r : readouts) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", r.time, r.value);
    os << buf;
  }
}

}  // namespace memsim::memcell
