#include "commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "image.hpp"
#include "memsim/calib.hpp"
#include "memsim/csv.hpp"
#include "memsim/device.hpp"
#include "memsim/memcell.hpp"

#ifndef MEMSIM_DEFAULT_DATA_DIR
#define MEMSIM_DEFAULT_DATA_DIR "data"
#endif

namespace memsim::cli {

namespace fs = std::filesystem;

fs::path data_dir() {
  if (const char* env = std::getenv("MEMSIM_DATA_DIR")) return env;
  return MEMSIM_DEFAULT_DATA_DIR;
}

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PendingFile {
  fs::path path;
  std::string content;
};

void check_writable(const fs::path& path) {
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) {
    throw std::runtime_error("output directory does not exist: " + parent.string());
  }
}

// All-or-nothing write: stage every file next to its target, then rename.
void commit(const std::vector<PendingFile>& files) {
  std::vector<fs::path> staged;
  try {
    for (const auto& f : files) {
      fs::path tmp = f.path;
      tmp += ".partial";
      std::ofstream os(tmp, std::ios::binary);
      staged.push_back(tmp);
      os << f.content;
      os.close();
      if (!os) throw std::runtime_error("cannot write " + f.path.string());
    }
    for (std::size_t i = 0; i < files.size(); ++i) fs::rename(staged[i], files[i].path);
  } catch (...) {
    std::error_code ec;
    for (const auto& tmp : staged) fs::remove(tmp, ec);
    throw;
  }
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

RunConfig resolve_config(const std::string& path) {
  if (!path.empty()) return load_config(path);
  const fs::path bundled = data_dir() / "default_config.json";
  if (fs::exists(bundled)) return load_config(bundled);
  return RunConfig{};
}

fs::path readout_path_for(const fs::path& trace) {
  fs::path p = trace;
  p.replace_filename(trace.stem().string() + "_readout.csv");
  return p;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  double vin = 1.0;
  std::string out = "trace.csv";
  std::string readout_out;
};

int cmd_simulate(const RunConfig& cfg, const SimulateArgs& a, std::ostream& out,
                 std::ostream& err) {
  if (!(a.vin >= 0.0)) throw UsageError("--vin must be non-negative");
  const fs::path trace_path = a.out;
  const fs::path readout_path =
      a.readout_out.empty() ? readout_path_for(trace_path) : fs::path(a.readout_out);
  check_writable(trace_path);
  check_writable(readout_path);

  const double limit =
      memcell::pass_gate_limit(cfg.cell.switch_params, cfg.cell.control_high);
  if (a.vin > limit) {
    err << "warning: vin " << a.vin << " V exceeds the pass-gate limit "
        << fmt("%.4f", limit) << " V; the stored value will be clipped\n";
  } else if (a.vin > 2.0) {
    err << "warning: vin " << a.vin << " V is above the 2 V storage range\n";
  }

  const memcell::CellTrace ct = memcell::simulate_cell(cfg.cell, a.vin, cfg.solver);

  std::ostringstream trace_csv, readout_csv;
  circuit::write_csv(trace_csv, ct.trace);
  memcell::write_readouts_csv(readout_csv, ct.readouts);
  commit({{trace_path, trace_csv.str()}, {readout_path, readout_csv.str()}});

  const std::size_t write_end = ct.trace.index_of_time(cfg.cell.pulses.write + cfg.cell.pulses.edge);
  out << "stored after write: " << fmt("%.6f", ct.trace.at(write_end, ct.nodes.primary))
      << " V\n";
  const double readout = ct.final_readout();
  out << "final readout: " << fmt("%.6f", readout) << " V at t = "
      << fmt("%.6g", ct.readouts.back().time) << " s\n";
  if (a.vin > 0.0) {
    out << "deviation from vin: " << fmt("%.3f", 100.0 * (readout - a.vin) / a.vin)
        << " %\n";
  } else {
    out << "deviation from vin: " << fmt("%.3g", readout - a.vin) << " V\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::string table;
  std::string out = "fit.json";
  double weight_exponent = calib::FitOptions{}.weight_exponent;
};

int cmd_calibrate(const RunConfig& cfg, const CalibrateArgs& a, std::ostream& out) {
  const fs::path table = a.table.empty() ? data_dir() / "gain_reference.csv" : fs::path(a.table);
  check_writable(a.out);
  std::ifstream in(table);
  if (!in) throw std::runtime_error("cannot open " + table.string());
  const auto rows = calib::read_gain_csv(in);

  calib::FitOptions opts;
  opts.weight_exponent = a.weight_exponent;
  const calib::FitReport report =
      calib::fit_retention(rows, cfg.cell.c_primary, cfg.cell.refresh_period, opts);

  commit({{a.out, fit_report_to_json(report).dump(2) + "\n"}});
  out << "g0 = " << fmt("%.6e", report.leak.g0) << " S, g1 = "
      << fmt("%.6e", report.leak.g1) << " S/V\n";
  out << "max_abs_residual = " << fmt("%.6e", report.max_abs_residual) << " V\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct TablesArgs {
  std::string which;
  std::string leak;
  std::string out;
  std::string reference;
};

int cmd_tables(const RunConfig& cfg, const TablesArgs& a, std::ostream& out) {
  if (a.which != "gain" && a.which != "error") {
    throw UsageError("--which must be gain or error");
  }
  if (a.leak.empty() || !fs::exists(a.leak)) {
    throw std::runtime_error("missing calibration: run `calibrate` and pass --leak <fit.json>");
  }
  if (!a.out.empty()) check_writable(a.out);
  const LeakModel leak = load_leak(a.leak);
  const bool gain = a.which == "gain";
  const fs::path ref_path = !a.reference.empty() ? fs::path(a.reference)
                              : data_dir() / (gain ? "gain_reference.csv" : "error_reference.csv");
  std::ifstream in(ref_path);
  if (!in) throw std::runtime_error("cannot open " + ref_path.string());

  std::ostringstream os;
  if (gain) {
    const auto ref = calib::read_gain_csv(in);
    std::vector<double> targets;
    for (const auto& r : ref) targets.push_back(r.v_target);
    const auto rows = calib::gain_table(leak, cfg.cell, targets);
    csv::write_row(os, std::vector<std::string>{
                           "v_target", "v_secondary", "gain", "r1_kohm", "ref_v_secondary",
                           "ref_gain", "diff_v_secondary", "diff_gain_pct"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      csv::write_row(os, std::vector<double>{
                             r.v_target, r.v_secondary, r.gain, r.r1_required / 1e3,
                             ref[i].v_secondary, ref[i].gain, r.v_secondary - ref[i].v_secondary,
                             100.0 * (r.gain - ref[i].gain) / ref[i].gain});
    }
  } else {
    const auto ref = calib::read_error_csv(in);
    std::vector<double> vins;
    for (const auto& r : ref) vins.push_back(r.v_in);
    const auto rows = calib::error_table(leak, cfg.cell, vins);
    csv::write_row(os, std::vector<std::string>{"v_in", "v_later", "error_pct",
                                                "ref_error_pct", "diff_error_pct"});
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& r = rows[i];
      csv::write_row(os, std::vector<double>{r.v_in, r.v_later, r.error_pct,
                                             ref[i].error_pct, r.error_pct - ref[i].error_pct});
    }
  }
  if (a.out.empty()) {
    out << os.str();
  } else {
    commit({{a.out, os.str()}});
    out << "wrote " << a.out << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct DeviceArgs {
  double beta = 1e-3;
  double vt0 = 0.5;
  double gamma = 0.4;
  double phi2 = 0.7;
  double lambda = 0.04;
  // iv-sweep
  std::vector<double> vgs{0.0, 0.5, 1.0, 1.5, 2.0};
  std::vector<double> vds{0.1, 0.5, 1.0, 2.0};
  double vsb = 0.0;
  std::string out;
  // params
  device::ProcessDoping doping;
  double tox = 2e-6;
  // noise
  std::optional<double> gm;
  std::optional<double> id;
  double bias_vgs = 1.0;
  double bias_vds = 1.0;
  device::NoiseParams noise;

  device::MosParams params() const {
    return device::MosParams::with_beta(beta, vt0, gamma, phi2, lambda);
  }
};

int cmd_iv_sweep(const DeviceArgs& a, std::ostream& out) {
  if (!a.out.empty()) check_writable(a.out);
  const device::MosParams p = a.params();
  std::ostringstream os;
  csv::write_row(os, std::vector<std::string>{"vgs", "vds", "vsb", "id"});
  for (double vgs : a.vgs) {
    for (double vds : a.vds) {
      csv::write_row(os, std::vector<double>{vgs, vds, a.vsb,
                                             device::drain_current(p, {vgs, vds, a.vsb})});
    }
  }
  if (a.out.empty()) {
    out << os.str();
  } else {
    commit({{a.out, os.str()}});
  }
  return kExitOk;
}

int cmd_params(const DeviceArgs& a, std::ostream& out) {
  const device::ProcessResult r = device::process_parameters(a.doping, a.tox);
  out << "cox = " << fmt("%.6e", r.cox) << " F/cm^2\n"
      << "phi_f_substrate = " << fmt("%.6f", r.phi_f_substrate) << " V\n"
      << "phi_f_gate = " << fmt("%.6f", r.phi_f_gate) << " V\n"
      << "phi_ms = " << fmt("%.6f", r.phi_ms) << " V\n"
      << "q_ss = " << fmt("%.6e", r.q_ss) << " C/cm^2\n"
      << "v_fb = " << fmt("%.6f", r.v_fb) << " V\n"
      << "gamma = " << fmt("%.6f", r.gamma) << " V^0.5\n"
      << "vt0 = " << fmt("%.6f", r.vt0) << " V\n";
  return kExitOk;
}

int cmd_noise(const DeviceArgs& a, std::ostream& out) {
  const device::MosParams p = a.params();
  double gm = 0.0, id = 0.0;
  if (a.gm) {
    gm = *a.gm;
    id = a.id ? *a.id : gm * gm / (2.0 * p.beta());
  } else {
    const device::SmallSignal s = device::small_signal(p, {a.bias_vgs, a.bias_vds, a.vsb});
    gm = s.gm;
    id = a.id ? *a.id : s.id;
  }
  const device::NoiseResult r = device::noise(gm, id, p, a.noise);
  out << "gm = " << fmt("%.6e", gm) << " S\n"
      << "id = " << fmt("%.6e", id) << " A\n"
      << "in_sq = " << fmt("%.6e", r.in_sq) << " A^2\n"
      << "veq_sq = " << fmt("%.6e", r.veq_sq) << " V^2\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ImageArgs {
  std::string in;
  std::string out;
  std::string stats;
  bool transient = false;
};

int cmd_image(const RunConfig& cfg, const ImageArgs& a, std::ostream& out,
              std::ostream& err) {
  check_writable(a.out);
  if (!a.stats.empty()) check_writable(a.stats);
  std::ifstream in(a.in, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + a.in);
  const GreyImage img = read_pgm(in);
  if (a.transient) {
    err << "warning: --transient runs a full 120 ms transient per grey level; "
           "this is slow\n";
  }
  const ImageResult res = store_image(img, cfg.cell, a.transient, cfg.solver);

  std::vector<PendingFile> files;
  std::ostringstream pgm;
  write_pgm(pgm, res.image);
  files.push_back({a.out, pgm.str()});
  if (!a.stats.empty()) {
    std::ostringstream st;
    write_stats_csv(st, res.stats);
    files.push_back({a.stats, st.str()});
  }
  commit(files);

  const ImageStats& s = res.stats;
  out << "capacitor count (digital vs analog): " << s.digital_capacitors << " vs "
      << s.analog_capacitors << "\n";
  out << "mean error: " << fmt("%.3f", s.mean_error_pct) << " %, max error: "
      << fmt("%.3f", s.max_error_pct) << " %\n";
  out << "mean abs error (pixels >= 0.4 V): "
      << fmt("%.3f", s.mean_abs_error_fullscale_pct_ge_0p4v) << " % of full scale\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Switched-capacitor analog memory cell simulator", "memcell-sim"};
  app.require_subcommand(1);
  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
  };

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Full transient of the refresh cycle");
  add_config(sim);
  sim->add_option("--vin", sim_args.vin, "Voltage to store (V)")->required();
  sim->add_option("--out", sim_args.out, "Trace CSV path");
  sim->add_option("--readout-out", sim_args.readout_out,
                  "Readout CSV path (default <out>_readout.csv)");

  CalibrateArgs cal_args;
  auto* cal = app.add_subcommand("calibrate", "Fit the leakage model to decay data");
  add_config(cal);
  cal->add_option("--table", cal_args.table, "Gain-table CSV (default: bundled data)");
  cal->add_option("--out", cal_args.out, "Fit report JSON path");
  cal->add_option("--weight-exponent", cal_args.weight_exponent,
                  "Residual weight exponent (0 = volts, 1 = relative)");

  TablesArgs tab_args;
  auto* tab = app.add_subcommand("tables", "Reproduce the gain or error table");
  add_config(tab);
  tab->add_option("--which", tab_args.which, "gain or error")
      ->required()
      ->check(CLI::IsMember({"gain", "error"}));
  tab->add_option("--leak", tab_args.leak, "Fit report JSON from calibrate")->required();
  tab->add_option("--out", tab_args.out, "Output CSV (default: stdout)");
  tab->add_option("--reference", tab_args.reference, "Reference table to diff against");

  DeviceArgs dev_args;
  auto* dev = app.add_subcommand("device", "MOS Level-1 model characterization");
  dev->require_subcommand(1);
  add_config(dev);
  auto add_mos = [&](CLI::App* sub) {
    add_config(sub);
    sub->add_option("--beta", dev_args.beta, "beta = mu0 Cox W/L (A/V^2)");
    sub->add_option("--vt0", dev_args.vt0, "Zero-bias threshold (V)");
    sub->add_option("--gamma", dev_args.gamma, "Body-effect coefficient (V^0.5)");
    sub->add_option("--phi2", dev_args.phi2, "2|phi_F| (V)");
    sub->add_option("--lambda", dev_args.lambda, "Channel-length modulation (1/V)");
  };
  auto* iv = dev->add_subcommand("iv-sweep", "Drain current over a (vgs, vds) grid");
  add_mos(iv);
  iv->add_option("--vgs", dev_args.vgs, "Gate-source voltages")->delimiter(',');
  iv->add_option("--vds", dev_args.vds, "Drain-source voltages")->delimiter(',');
  iv->add_option("--vsb", dev_args.vsb, "Source-bulk voltage");
  iv->add_option("--out", dev_args.out, "Output CSV (default: stdout)");

  auto* prm = dev->add_subcommand("params", "Threshold-voltage process chain");
  add_config(prm);
  prm->add_option("--n-sub", dev_args.doping.n_sub, "Substrate doping (cm^-3)");
  prm->add_option("--n-gate", dev_args.doping.n_gate, "Gate doping (cm^-3)");
  prm->add_option("--n-ss", dev_args.doping.n_ss, "Oxide charge density (cm^-2)");
  prm->add_option("--temperature", dev_args.doping.temperature, "Temperature (K)");
  prm->add_option("--tox", dev_args.tox, "Oxide thickness (cm)");

  auto* noi = dev->add_subcommand("noise", "Channel noise at a bias point");
  add_mos(noi);
  noi->add_option("--gm", dev_args.gm, "Transconductance (S); default from bias");
  noi->add_option("--id", dev_args.id, "Drain current (A); default from bias or gm");
  noi->add_option("--vgs", dev_args.bias_vgs, "Bias vgs (V)");
  noi->add_option("--vds", dev_args.bias_vds, "Bias vds (V)");
  noi->add_option("--vsb", dev_args.vsb, "Bias vsb (V)");
  noi->add_option("--kf", dev_args.noise.kf, "Flicker coefficient (F A)");
  noi->add_option("--eta", dev_args.noise.eta, "g_mbs / g_m");
  noi->add_option("--delta-f", dev_args.noise.delta_f, "Bandwidth (Hz)");
  noi->add_option("--freq", dev_args.noise.freq, "Frequency (Hz)");
  noi->add_option("--temperature", dev_args.noise.temperature, "Temperature (K)");

  ImageArgs img_args;
  auto* img = app.add_subcommand("image", "Store a greyscale PGM in the cell array");
  add_config(img);
  img->add_option("--in", img_args.in, "Input PGM (P2 or P5)")->required();
  img->add_option("--out", img_args.out, "Reconstructed PGM")->required();
  img->add_option("--stats", img_args.stats, "Error statistics CSV");
  img->add_flag("--transient", img_args.transient,
                "Use the full transient per grey level instead of the closed form");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    const RunConfig cfg = resolve_config(config_path);
    if (sim->parsed()) return cmd_simulate(cfg, sim_args, out, err);
    if (cal->parsed()) return cmd_calibrate(cfg, cal_args, out);
    if (tab->parsed()) return cmd_tables(cfg, tab_args, out);
    if (iv->parsed()) return cmd_iv_sweep(dev_args, out);
    if (prm->parsed()) return cmd_params(dev_args, out);
    if (noi->parsed()) return cmd_noise(dev_args, out);
    if (img->parsed()) return cmd_image(cfg, img_args, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const circuit::SolverError& e) {
    err << "error: " << e.what() << " (t = " << e.time() << " s)\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace memsim::cli
