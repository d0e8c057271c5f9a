#pragma once

// Small fixed-topology circuits and their transient solution by backward
// Euler with damped Newton-Raphson on the modified nodal equations.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "memsim/device.hpp"
#include "memsim/leak_model.hpp"
#include "memsim/waveform.hpp"

namespace memsim::circuit {

/// Node index; 0 is ground.
using NodeId = std::size_t;
inline constexpr NodeId kGround = 0;

struct Capacitor {
  NodeId a;
  NodeId b;
  double c;  // F
};

struct Resistor {
  NodeId a;
  NodeId b;
  double r;  // Ohm
};

/// NMOS pass switch with bulk tied to ground. Drain and source are
/// interchangeable; the gate is driven by an ideal control waveform.
struct MosSwitch {
  NodeId a;
  NodeId b;
  device::MosParams params;
  PwlWaveform gate;
};

/// Nonlinear leakage from `node` to ground.
struct LeakageSink {
  NodeId node;
  LeakModel model;
};

/// Closed-loop non-inverting amplifier: out = clamp((1 + r1/r0) * in, +-rail).
/// The input draws in/r_in; with finite gbw the output follows through a
/// first-order lag of time constant gain / (2 pi gbw).
struct OpAmpBlock {
  NodeId in;
  NodeId out;
  double r0;    // Ohm
  double r1;    // Ohm
  double rail;  // V
  double gbw = std::numeric_limits<double>::infinity();  // Hz
  double r_in = 1e12;  // Ohm

  double gain() const { return 1.0 + r1 / r0; }
};

/// Ideal voltage source from `node` to ground.
struct VSource {
  NodeId node;
  PwlWaveform w;
};

using Element =
    std::variant<Capacitor, Resistor, MosSwitch, LeakageSink, OpAmpBlock, VSource>;

class Netlist {
 public:
  Netlist() : names_{"0"}, initial_{0.0} {}

  NodeId add_node(std::string name, double initial_voltage = 0.0);
  void add(Element e);

  void set_initial(NodeId n, double v);

  std::size_t node_count() const { return names_.size(); }
  const std::string& node_name(NodeId n) const { return names_.at(n); }
  NodeId find_node(const std::string& name) const;
  std::span<const Element> elements() const { return elements_; }
  std::span<const double> initial_voltages() const { return initial_; }

  template <typename T>
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& e : elements_) n += std::holds_alternative<T>(e) ? 1 : 0;
    return n;
  }

  /// Checks element values and terminal ranges. Throws std::invalid_argument.
  void validate() const;

 private:
  std::vector<std::string> names_;
  std::vector<double> initial_;
  std::vector<Element> elements_;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

class ConvergenceError : public SolverError {
 public:
  using SolverError::SolverError;
};

class SingularSystemError : public SolverError {
 public:
  using SolverError::SolverError;
};

struct NewtonOptions {
  double tol = 1e-6;          // V
  int max_iterations = 50;
  double max_update = 0.5;    // V per iteration, damping limit
};

struct StepPolicy {
  double fine_dt = 1e-9;      // s, near control events
  double max_dt = 100e-6;     // s, hold phases
  double event_guard = 1e-6;  // s, fine window around each breakpoint
  NewtonOptions newton;
};

/// Node voltages (index 0 is ground) sampled at every accepted step.
struct Trace {
  std::vector<std::string> node_names;
  std::vector<double> times;
  std::vector<std::vector<double>> voltages;  // one row per time

  std::size_t index_of_time(double t) const;
  double at(std::size_t row, NodeId node) const { return voltages[row][node]; }
  std::vector<double> column(NodeId node) const;
};

/// Node voltages consistent with the sources at time t; used as the initial
/// state of a transient run.
std::vector<double> initial_state(const Netlist& netlist, double t = 0.0);

/// Advances `state` (taken at time t) to t + dt.
std::vector<double> step(const Netlist& netlist, std::span<const double> state,
                         double t, double dt, const NewtonOptions& opts = {});

/// Integrates from 0 to t_stop, aligning a step boundary with every
/// breakpoint of every waveform in the netlist.
Trace run_transient(const Netlist& netlist, double t_stop,
                    const StepPolicy& policy = {});

/// CSV with header `time,<node>,...` (ground omitted), 17 significant digits.
void write_csv(std::ostream& os, const Trace& trace);

}  // namespace memsim::circuit
