#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "memsim/memcell.hpp"
#include "test_support.hpp"

using namespace memsim;
using namespace memsim::memcell;
using circuit::PwlWaveform;

namespace {

CellConfig calibrated_config() {
  CellConfig cfg;
  cfg.leak = fixtures::calibrated_leak();
  return cfg;
}

// Leak such that gain * retention / 2 == 1 over one refresh period.
CellConfig fixed_point_config() {
  CellConfig cfg;
  const double ratio = 2.0 / cfg.gain();
  cfg.leak = {-std::log(ratio) / cfg.refresh_period * cfg.c_primary, 0.0};
  return cfg;
}

// Fine-step RK4 integration of C dv/dt = -(g0 v + g1 v^2).
double ode_retention(const LeakModel& m, double c, double v0, double t, double h) {
  auto f = [&](double v) { return -(m.g0 * v + m.g1 * v * v) / c; };
  const int n = static_cast<int>(std::llround(t / h));
  double v = v0;
  for (int i = 0; i < n; ++i) {
    const double k1 = f(v);
    const double k2 = f(v + 0.5 * h * k1);
    const double k3 = f(v + 0.5 * h * k2);
    const double k4 = f(v + h * k3);
    v += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return v;
}

// Plain iteration of v <- high - VT(v), written out without the library.
double fixed_point_oracle(double high, double vt0, double gamma, double phi2) {
  double v = 0.0;
  for (int i = 0; i < 500; ++i) {
    v = high - (vt0 + gamma * (std::sqrt(phi2 + v) - std::sqrt(phi2)));
  }
  return v;
}

circuit::Trace write_only(const CellConfig& cfg, double vin, double width, double settle) {
  ControlSchedule s = ControlSchedule::idle();
  s.v_in = PwlWaveform::constant(vin);
  s.v_write = pulse(0.0, width, cfg.control_high, cfg.pulses.edge);
  const BuiltCell cell = build_cell(cfg, Stage::kWriteOnly, s);
  return circuit::run_transient(cell.netlist, width + cfg.pulses.edge + settle);
}

}  // namespace

TEST(BuildCell, FullCellElementCounts) {
  const CellConfig cfg;
  const BuiltCell cell = build_cell(cfg, Stage::kFull, default_schedule(cfg, 1.0));
  const auto& n = cell.netlist;
  EXPECT_EQ(n.count<circuit::MosSwitch>(), 5u);
  EXPECT_EQ(n.count<circuit::Capacitor>(), 2u);
  EXPECT_EQ(n.count<circuit::OpAmpBlock>(), 1u);
  EXPECT_EQ(n.count<circuit::LeakageSink>(), 2u);
  EXPECT_EQ(n.count<circuit::VSource>(), 1u);
  EXPECT_EQ(n.count<circuit::Resistor>(), 0u);
  EXPECT_TRUE(cell.canonical);
  EXPECT_NO_THROW(n.validate());
}

TEST(BuildCell, StagesAddElementsIncrementally) {
  const CellConfig cfg;
  const ControlSchedule s = default_schedule(cfg, 1.0);
  const BuiltCell w = build_cell(cfg, Stage::kWriteOnly, s);
  EXPECT_EQ(w.netlist.count<circuit::MosSwitch>(), 1u);
  EXPECT_EQ(w.netlist.count<circuit::Capacitor>(), 1u);
  EXPECT_EQ(w.netlist.count<circuit::LeakageSink>(), 1u);
  EXPECT_EQ(w.netlist.count<circuit::VSource>(), 1u);
  EXPECT_EQ(w.nodes.secondary, 0u);

  const BuiltCell t = build_cell(cfg, Stage::kWithTransfer, s);
  EXPECT_EQ(t.netlist.count<circuit::MosSwitch>(), 2u);
  EXPECT_EQ(t.netlist.count<circuit::Capacitor>(), 2u);
  EXPECT_EQ(t.netlist.count<circuit::LeakageSink>(), 2u);

  const BuiltCell d = build_cell(cfg, Stage::kWithDischarge, s);
  EXPECT_EQ(d.netlist.count<circuit::MosSwitch>(), 3u);
  EXPECT_EQ(d.netlist.count<circuit::OpAmpBlock>(), 0u);
}

TEST(BuildCell, UnequalCapacitorsAreFlaggedNonCanonical) {
  CellConfig cfg;
  cfg.c_secondary = 2e-12;
  for (Stage st : {Stage::kWriteOnly, Stage::kWithTransfer, Stage::kWithDischarge, Stage::kFull}) {
    const BuiltCell cell = build_cell(cfg, st, default_schedule(cfg, 1.0));
    EXPECT_FALSE(cell.canonical);
  }
}

TEST(BuildCell, InvalidConfigNamesField) {
  CellConfig cfg;
  cfg.c_primary = -1.0;
  try {
    build_cell(cfg, Stage::kFull, ControlSchedule::idle());
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "c_primary");
  }
}

TEST(Schedule, DefaultTiming) {
  const CellConfig cfg;
  const ControlSchedule s = default_schedule(cfg, 1.0);
  EXPECT_EQ(s.v_write(0.5e-9), 1.5);
  EXPECT_EQ(s.v_write(20e-9), 3.0);
  EXPECT_EQ(s.v_write(40e-9), 3.0);
  EXPECT_EQ(s.v_write(41e-9), 0.0);
  EXPECT_EQ(s.v_in(41e-9), 1.0);
  EXPECT_EQ(s.v_in(42e-9), 1.0);
  ASSERT_EQ(s.bursts.size(), 3u);
  EXPECT_DOUBLE_EQ(s.bursts[0].start, 40e-3);
  EXPECT_DOUBLE_EQ(s.bursts[1].start, 80e-3);
  EXPECT_DOUBLE_EQ(s.bursts[2].start, 120e-3);
  EXPECT_DOUBLE_EQ(s.frame_period, 40e-3);
}

TEST(Schedule, LowerFrameRateKeepsRefreshCadence) {
  CellConfig cfg;
  cfg.frame_rate = 8.0;
  const ControlSchedule s = default_schedule(cfg, 1.0);
  EXPECT_DOUBLE_EQ(s.frame_period, 0.125);
  ASSERT_EQ(s.bursts.size(), 3u);
  for (std::size_t k = 0; k < s.bursts.size(); ++k) {
    EXPECT_DOUBLE_EQ(s.bursts[k].start, (k + 1) * 40e-3);
  }
}

TEST(Schedule, ShortWritePulseRejected) {
  CellConfig cfg;
  cfg.pulses.write = 30e-9;
  try {
    default_schedule(cfg, 1.0);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "pulse_widths.write");
  }
}

TEST(Schedule, InfeasibleBurstRejected) {
  CellConfig cfg;
  cfg.refresh_period = 500e-9;
  cfg.storage_time = 1.5e-6;
  EXPECT_THROW(default_schedule(cfg, 1.0), ConfigError);
}

TEST(Schedule, NegativeInputRejected) {
  EXPECT_THROW(default_schedule(CellConfig{}, -0.1), ConfigError);
}

TEST(Schedule, BurstPhasesAreOrdered) {
  for (double period : {40e-3, 10e-3, 5e-6}) {
    CellConfig cfg;
    cfg.refresh_period = period;
    cfg.storage_time = 4 * period;
    const ControlSchedule s = default_schedule(cfg, 1.0);
    ASSERT_EQ(s.bursts.size(), 4u);
    double prev_end = 0.0;
    for (const Burst& b : s.bursts) {
      EXPECT_GT(b.start, prev_end);
      EXPECT_LT(b.start, b.transfer_on);
      EXPECT_LT(b.transfer_on + cfg.pulses.transfer + cfg.pulses.edge, b.amplify_on);
      EXPECT_LT(b.amplify_on, b.refresh_on);
      EXPECT_LT(b.refresh_on + cfg.pulses.refresh + cfg.pulses.edge, b.amplify_off);
      EXPECT_LT(b.amplify_off, b.discharge_on);
      EXPECT_LT(b.discharge_on, b.end);
      prev_end = b.end;
    }
  }
}

TEST(Schedule, TransferAndDischargeNeverBothOn) {
  for (double period : {40e-3, 2e-6}) {
    CellConfig cfg;
    cfg.refresh_period = period;
    cfg.storage_time = 3 * period;
    const ControlSchedule s = default_schedule(cfg, 1.0);
    const double half = cfg.control_high / 2.0;
    std::vector<double> times;
    for (const auto* w : {&s.v_transfer, &s.v_discharge, &s.v_amplify, &s.v_refresh}) {
      for (const auto& b : w->breakpoints()) {
        for (double dt : {-0.5e-9, 0.0, 0.5e-9}) times.push_back(b.time + dt);
      }
    }
    for (const Burst& b : s.bursts) {
      for (double t = b.start - 5e-9; t < b.end + 5e-9; t += 0.25e-9) times.push_back(t);
    }
    for (double t : times) {
      EXPECT_FALSE(s.v_transfer(t) > half && s.v_discharge(t) > half) << t;
      EXPECT_FALSE(s.v_amplify(t) > half && s.v_discharge(t) > half) << t;
    }
  }
}

TEST(Retention, ExamplesAndLimits) {
  const double c = 1e-12;
  const LeakModel half_life{std::log(2.0) / 40e-3 * c, 0.0};
  EXPECT_NEAR(retention(half_life, c, 1.0, 40e-3), 0.5, 1e-15);
  EXPECT_EQ(retention(fixtures::calibrated_leak(), c, 0.0, 40e-3), 0.0);
  EXPECT_EQ(retention({}, c, 1.3, 40e-3), 1.3);
  const LeakModel quad{0.0, 2e-12};
  EXPECT_NEAR(retention(quad, c, 1.0, 40e-3), 1.0 / (1.0 + 2.0 * 40e-3), 1e-15);
  EXPECT_THROW(retention(quad, c, -1.0, 1.0), std::invalid_argument);
}

TEST(Retention, MatchesFineStepOde) {
  const LeakModel& m = fixtures::calibrated_leak();
  for (double v0 : {0.2, 1.0, 2.0}) {
    const double ode = ode_retention(m, 1e-12, v0, 40e-3, 1e-6);
    EXPECT_NEAR(retention(m, 1e-12, v0, 40e-3), ode, 1e-6 * ode) << v0;
  }
  const LeakModel strong{5e-11, 2e-11};
  const double ode = ode_retention(strong, 1e-12, 1.5, 40e-3, 1e-6);
  EXPECT_NEAR(retention(strong, 1e-12, 1.5, 40e-3), ode, 1e-6 * ode);
}

TEST(Retention, NonIncreasingInTimeAndBoundedByStart) {
  const LeakModel& m = fixtures::calibrated_leak();
  for (double v0 : {0.0, 0.1, 0.7, 1.5, 2.5}) {
    double prev = v0;
    for (int i = 0; i <= 100; ++i) {
      const double v = retention(m, 1e-12, v0, i * 2e-3);
      EXPECT_LE(v, prev);
      EXPECT_LE(v, v0);
      EXPECT_GE(v, 0.0);
      prev = v;
    }
  }
}

TEST(PassGate, LimitMatchesFixedPointIteration) {
  const device::MosParams p = default_switch_params();
  const double oracle = fixed_point_oracle(3.0, p.vt0, p.gamma, p.phi_f_abs2);
  EXPECT_NEAR(pass_gate_limit(p, 3.0), oracle, 1e-9);
  EXPECT_EQ(pass_gate_limit(p, 0.3), 0.0);
}

TEST(PassGate, LongWriteSettlesAtLimit) {
  const CellConfig cfg;
  const device::MosParams& p = cfg.switch_params;
  const double oracle = fixed_point_oracle(cfg.control_high, p.vt0, p.gamma, p.phi_f_abs2);
  for (double vin : {2.6, 3.0}) {
    const circuit::Trace tr = write_only(cfg, vin, 20e-6, 10e-9);
    EXPECT_NEAR(tr.voltages.back()[2], oracle, 5e-3) << vin;
    EXPECT_LT(tr.voltages.back()[2], vin);
  }
}

TEST(WriteTiming, FullWidthPulseReachesTarget) {
  const CellConfig cfg;
  const double limit = pass_gate_limit(cfg.switch_params, cfg.control_high);
  for (double vin : {0.2, 1.0, 2.0}) {
    const circuit::Trace tr = write_only(cfg, vin, 40e-9, 0.0);
    EXPECT_GE(tr.voltages.back()[2], 0.99 * std::min(vin, limit)) << vin;
  }
}

TEST(WriteTiming, ShortPulseFallsShort) {
  const CellConfig cfg;
  const double limit = pass_gate_limit(cfg.switch_params, cfg.control_high);
  for (double vin : {1.0, 2.0}) {
    const circuit::Trace tr = write_only(cfg, vin, 4e-9, 0.0);
    EXPECT_LT(tr.voltages.back()[2], 0.99 * std::min(vin, limit)) << vin;
  }
}

TEST(Behavioral, FixedPointIsExact) {
  const CellConfig cfg = fixed_point_config();
  for (double vin : {0.2, 1.0, 2.0}) {
    for (int n = 0; n <= 10; ++n) {
      EXPECT_NEAR(behavioral_store(cfg, vin, n), vin, 1e-12 * vin) << vin << " " << n;
    }
  }
}

TEST(Behavioral, ZeroIsFixedPoint) {
  EXPECT_EQ(behavioral_store(calibrated_config(), 0.0, 3), 0.0);
}

TEST(Behavioral, ClampsAtRailAndClipsAtPassGate) {
  CellConfig cfg;  // no leak: every cycle multiplies by gain / 2
  EXPECT_EQ(behavioral_store(cfg, 1.5, 1), cfg.supply_rail);
  const double limit = pass_gate_limit(cfg.switch_params, cfg.control_high);
  EXPECT_EQ(behavioral_store(cfg, 2.8, 0), limit);
  EXPECT_THROW(behavioral_store(cfg, 1.0, -1), std::invalid_argument);
}

// Leak model passing exactly through the (0.2 V, 0.048 V) and (1.0 V, 0.228 V)
// decay points, solved here by hand from 1/v(T) = 1/(v0 E) + b(1 - E)/(a E).
TEST(Behavioral, CompoundsPerCycleFactor) {
  const double t = 40e-3;
  const double inv_lo = 1.0 / (2 * 0.048), inv_hi = 1.0 / (2 * 0.228);
  const double e = (1.0 / 0.2 - 1.0 / 1.0) / (inv_lo - inv_hi);
  const double a = -std::log(e) / t;
  const double k = inv_hi - 1.0 / e;
  const double b = k * a * e / (1.0 - e);
  CellConfig cfg;
  cfg.leak = {a * cfg.c_primary, b * cfg.c_primary};
  EXPECT_NEAR(retention(cfg.leak, cfg.c_primary, 0.2, t) / 2, 0.048, 1e-12);
  EXPECT_NEAR(retention(cfg.leak, cfg.c_primary, 1.0, t) / 2, 0.228, 1e-12);

  auto compound = [&](double v) {
    for (int i = 0; i < 3; ++i) {
      const double e_t = std::exp(-a * t);
      v = 4.4 * 0.5 * a * v * e_t / (a + b * v * (1 - e_t));
    }
    return v;
  };
  EXPECT_NEAR(behavioral_store(cfg, 1.0, 3), compound(1.0), 1e-12);
  EXPECT_NEAR(behavioral_store(cfg, 1.0, 3), 1.01, 0.02);
  EXPECT_NEAR(behavioral_store(cfg, 0.2, 3), compound(0.2), 1e-12);
  EXPECT_NEAR(behavioral_store(cfg, 0.2, 3), 0.235, 0.01);
}

TEST(Behavioral, NonCanonicalCapacitorsShareByRatio) {
  CellConfig cfg;
  cfg.c_secondary = 3e-12;
  EXPECT_NEAR(behavioral_store(cfg, 1.0, 1), 4.4 * 0.25, 1e-15);
}

TEST(SimulateCell, DefaultRunMatchesExpectedWaveforms) {
  const CellConfig cfg = calibrated_config();
  const CellTrace ct = simulate_cell(cfg, 1.0);
  const ControlSchedule s = default_schedule(cfg, 1.0);
  const auto& tr = ct.trace;

  const std::size_t after_write = tr.index_of_time(cfg.pulses.write + cfg.pulses.edge);
  EXPECT_NEAR(tr.at(after_write, ct.nodes.primary), 1.0, 0.01);

  const Burst& first = s.bursts.front();
  const double decayed = tr.at(tr.index_of_time(first.transfer_on), ct.nodes.primary);
  const double shared = tr.at(
      tr.index_of_time(first.transfer_on + cfg.pulses.transfer + cfg.pulses.edge),
      ct.nodes.secondary);
  EXPECT_NEAR(shared, 0.5 * decayed, 0.005 * decayed);

  ASSERT_EQ(ct.readouts.size(), 3u);
  EXPECT_DOUBLE_EQ(ct.readouts.back().time, s.bursts.back().amplify_off);
  EXPECT_NEAR(ct.final_readout(), 1.0, 0.05);
}

TEST(SimulateCell, DischargeEmptiesSecondary) {
  const CellConfig cfg = calibrated_config();
  for (double vin : {0.5, 2.0}) {
    const CellTrace ct = simulate_cell(cfg, vin);
    const ControlSchedule s = default_schedule(cfg, vin);
    const auto& tr = ct.trace;
    for (std::size_t k = 0; k < s.bursts.size(); ++k) {
      EXPECT_LT(std::abs(tr.at(tr.index_of_time(s.bursts[k].start), ct.nodes.secondary)), 1e-3);
    }
    EXPECT_LT(std::abs(tr.voltages.back()[ct.nodes.secondary]), 1e-3);
  }
}

TEST(SimulateCell, AgreesWithBehavioralPath) {
  const CellConfig cfg = calibrated_config();
  for (double vin : {0.4, 1.0, 1.6}) {
    const double transient = simulate_cell(cfg, vin).final_readout();
    EXPECT_NEAR(transient, behavioral_store(cfg, vin, 3), 0.02 * vin) << vin;
  }
}

TEST(SimulateCell, ZeroInputStaysAtZero) {
  const CellTrace ct = simulate_cell(calibrated_config(), 0.0);
  EXPECT_NEAR(ct.final_readout(), 0.0, 1e-9);
}

TEST(SimulateCell, ReadoutCsvFormat) {
  std::ostringstream os;
  write_readouts_csv(os, {{0.04, 1.25}, {0.08, 0.5}});
  EXPECT_EQ(os.str(), "time,readout_volts\n0.040000000000000001,1.25\n"
                      "0.080000000000000002,0.5\n");
}
