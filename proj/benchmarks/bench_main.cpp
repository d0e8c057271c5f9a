#include <benchmark/benchmark.h>

#include <fstream>

#include "memsim/calib.hpp"
#include "memsim/circuit.hpp"
#include "memsim/device.hpp"
#include "memsim/memcell.hpp"

using namespace memsim;

namespace {

std::vector<calib::GainRow> decay_rows() {
  std::ifstream in(std::string(MEMSIM_BENCH_DATA_DIR) + "/gain_reference.csv");
  return calib::read_gain_csv(in);
}

memcell::CellConfig calibrated() {
  static const LeakModel leak = calib::fit_retention(decay_rows(), 1e-12).leak;
  memcell::CellConfig cfg;
  cfg.leak = leak;
  return cfg;
}

void BM_DrainCurrent(benchmark::State& state) {
  const device::MosParams p = memcell::default_switch_params();
  double vds = 0.0;
  for (auto _ : state) {
    vds = vds > 2.0 ? 0.0 : vds + 1e-3;
    benchmark::DoNotOptimize(device::drain_current(p, {2.5, vds, 0.3}));
  }
}
BENCHMARK(BM_DrainCurrent);

void BM_OperatingPoint(benchmark::State& state) {
  const device::MosParams p = memcell::default_switch_params();
  for (auto _ : state) {
    benchmark::DoNotOptimize(device::operating_point(p, {2.5, 0.4, 0.3}));
  }
}
BENCHMARK(BM_OperatingPoint);

void BM_StepFullCell(benchmark::State& state) {
  const memcell::CellConfig cfg = calibrated();
  const memcell::BuiltCell cell =
      memcell::build_cell(cfg, memcell::Stage::kFull, memcell::default_schedule(cfg, 1.0));
  const std::vector<double> s0 = circuit::initial_state(cell.netlist);
  for (auto _ : state) {
    benchmark::DoNotOptimize(circuit::step(cell.netlist, s0, 10e-9, 1e-9));
  }
}
BENCHMARK(BM_StepFullCell);

void BM_BehavioralStore(benchmark::State& state) {
  const memcell::CellConfig cfg = calibrated();
  for (auto _ : state) {
    benchmark::DoNotOptimize(memcell::behavioral_store(cfg, 1.0, 3));
  }
}
BENCHMARK(BM_BehavioralStore);

void BM_FitRetention(benchmark::State& state) {
  const auto rows = decay_rows();
  for (auto _ : state) {
    benchmark::DoNotOptimize(calib::fit_retention(rows, 1e-12));
  }
}
BENCHMARK(BM_FitRetention)->Unit(benchmark::kMillisecond);

void BM_SimulateCell(benchmark::State& state) {
  const memcell::CellConfig cfg = calibrated();
  for (auto _ : state) {
    benchmark::DoNotOptimize(memcell::simulate_cell(cfg, 1.0));
  }
}
BENCHMARK(BM_SimulateCell)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
