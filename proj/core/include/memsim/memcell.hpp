#pragma once

// The two-capacitor switched-capacitor analog memory cell: topology builder,
// control-schedule generator, full transient run and the closed-form
// behavioral refresh map.

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "memsim/circuit.hpp"
#include "memsim/device.hpp"
#include "memsim/leak_model.hpp"

namespace memsim::memcell {

class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct PulseWidths {
  double write = 40e-9;
  double vin_window = 42e-9;
  double transfer = 100e-9;
  double amplify = 500e-9;
  double refresh = 200e-9;
  double guard = 10e-9;
  double edge = 1e-9;  // rise/fall time of every control pulse
};

/// Default switch sizing: beta = 5e-4 A/V^2 with the default process.
device::MosParams default_switch_params();

struct CellConfig {
  double c_primary = 1e-12;    // F
  double c_secondary = 1e-12;  // F
  double r0 = 500.0;           // Ohm
  double r1 = 1700.0;          // Ohm
  double supply_rail = 2.5;    // V, op-amp output clamp
  double control_high = 3.0;   // V
  device::MosParams switch_params = default_switch_params();
  LeakModel leak;
  PulseWidths pulses;
  double refresh_period = 40e-3;  // s
  double storage_time = 120e-3;   // s
  double frame_rate = 25.0;       // Hz

  double gain() const { return 1.0 + r1 / r0; }
  /// Fraction of the primary voltage left on both plates after sharing.
  double share_ratio() const { return c_primary / (c_primary + c_secondary); }
  /// Equal capacitors, as required for exact halving.
  bool canonical() const { return c_primary == c_secondary; }
  int cycles() const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
};

enum class Stage { kWriteOnly, kWithTransfer, kWithDischarge, kFull };

/// One read/refresh burst. All times are absolute, in seconds.
struct Burst {
  double start;          // discharge released
  double transfer_on;
  double amplify_on;
  double refresh_on;
  double amplify_off;    // readout instant, start of the amplify falling edge
  double discharge_on;
  double end;            // discharge fully reasserted
};

struct ControlSchedule {
  circuit::PwlWaveform v_in;
  circuit::PwlWaveform v_write;
  circuit::PwlWaveform v_transfer;
  circuit::PwlWaveform v_discharge;
  circuit::PwlWaveform v_amplify;
  circuit::PwlWaveform v_refresh;
  std::vector<Burst> bursts;  // the last one is the final read
  double frame_period = 0.0;  // s

  /// All-low controls with v_in held at zero.
  static ControlSchedule idle();
};

/// Trapezoidal pulse: rises at `start`, falls at `start + width`.
circuit::PwlWaveform pulse(double start, double width, double high, double edge);

ControlSchedule default_schedule(const CellConfig& cfg, double vin);

/// Node handles of a built cell. Unused nodes for reduced stages are 0.
struct CellNodes {
  circuit::NodeId in = 0;
  circuit::NodeId primary = 0;
  circuit::NodeId secondary = 0;
  circuit::NodeId amp_in = 0;
  circuit::NodeId out = 0;
};

struct BuiltCell {
  circuit::Netlist netlist;
  CellNodes nodes;
  bool canonical = true;
};

BuiltCell build_cell(const CellConfig& cfg, Stage stage,
                     const ControlSchedule& schedule);

struct Readout {
  double time;
  double value;
};

struct CellTrace {
  circuit::Trace trace;
  CellNodes nodes;
  std::vector<Readout> readouts;

  std::vector<double> v_primary() const { return trace.column(nodes.primary); }
  std::vector<double> v_secondary() const { return trace.column(nodes.secondary); }
  std::vector<double> v_out() const { return trace.column(nodes.out); }
  double final_readout() const { return readouts.back().value; }
};

CellTrace simulate_cell(const CellConfig& cfg, double vin,
                        const circuit::StepPolicy& policy = {});

/// Exact solution of C dv/dt = -(g0 v + g1 v^2) after `dt` seconds.
double retention(const LeakModel& leak, double c, double v0, double dt);

/// Highest voltage an NMOS pass gate driven to `gate_high` can deliver:
/// the fixed point v = gate_high - VT(v).
double pass_gate_limit(const device::MosParams& p, double gate_high);

/// Closed-form refresh loop: write, then `n_cycles` rounds of hold, share,
/// amplify and write back. Returns the last op-amp output (the initial write
/// value when n_cycles is 0).
double behavioral_store(const CellConfig& cfg, double vin, int n_cycles);

/// Readout events as CSV: `time,readout_volts`.
void write_readouts_csv(std::ostream& os, const std::vector<Readout>& readouts);

}  // namespace memsim::memcell
