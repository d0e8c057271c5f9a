#include "memsim/device.hpp"

#include <cmath>
#include <limits>

namespace memsim::device {

namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0)) {
    throw DomainError(std::string(name) + " must be positive");
  }
}

}  // namespace

void DeviceConstants::validate() const {
  require_positive(boltzmann_k, "boltzmann_k");
  require_positive(q_electron, "q_electron");
  require_positive(ni_300k, "ni_300k");
  require_positive(eps0, "eps0");
  require_positive(eps_si, "eps_si");
  require_positive(eps_ox, "eps_ox");
  require_positive(silicon_bandgap_vg, "silicon_bandgap_vg");
}

MosParams MosParams::with_beta(double beta, double vt0, double gamma,
                               double phi_f_abs2, double lambda) {
  MosParams p;
  p.vt0 = vt0;
  p.gamma = gamma;
  p.phi_f_abs2 = phi_f_abs2;
  p.lambda = lambda;
  p.w_eff = beta * p.l_eff / p.process_transconductance();
  return p;
}

void MosParams::validate() const {
  require_positive(mu0, "mu0");
  require_positive(tox, "tox");
  require_positive(w_eff, "w_eff");
  require_positive(l_eff, "l_eff");
  require_positive(phi_f_abs2, "phi_f_abs2");
  if (gamma < 0.0) throw DomainError("gamma must be non-negative");
  if (lambda < 0.0) throw DomainError("lambda must be non-negative");
}

double threshold_voltage(const MosParams& p, double vsb) {
  const double surface = p.phi_f_abs2 + vsb;
  if (surface < 0.0) {
    throw DomainError("2|phi_F| + vsb is negative");
  }
  return p.vt0 + p.gamma * (std::sqrt(surface) - std::sqrt(p.phi_f_abs2));
}

ProcessResult process_parameters(const ProcessDoping& d, double tox,
                                 const DeviceConstants& k) {
  require_positive(tox, "tox");
  require_positive(d.temperature, "temperature");
  if (!(d.n_sub > 0.0) || !(d.n_gate > 0.0) || !(k.ni_300k > 0.0)) {
    throw DomainError("doping logarithm argument must be positive");
  }
  const double vt = k.thermal_voltage(d.temperature);
  ProcessResult r{};
  r.cox = k.eps_ox / tox;
  r.phi_f_substrate = -vt * std::log(d.n_sub / k.ni_300k);
  r.phi_f_gate = -vt * std::log(d.n_gate / k.ni_300k);
  r.phi_ms = r.phi_f_substrate - r.phi_f_gate;
  r.q_ss = k.q_electron * d.n_ss;
  r.v_fb = r.phi_ms - r.q_ss / r.cox;
  r.gamma = std::sqrt(2.0 * k.eps_si * k.q_electron * d.n_sub) / r.cox;
  const double two_phi = 2.0 * std::abs(r.phi_f_substrate);
  r.vt0 = r.v_fb + two_phi +
          std::sqrt(2.0 * k.q_electron * k.eps_si * d.n_sub * two_phi) / r.cox;
  return r;
}

double triode_current(const MosParams& p, double vov, double vds) {
  return p.beta() * (vov - 0.5 * vds) * vds * (1.0 + p.lambda * vds);
}

double saturation_current(const MosParams& p, double vov, double vds) {
  return 0.5 * p.beta() * vov * vov * (1.0 + p.lambda * vds);
}

OperatingPoint operating_point(const MosParams& p, const MosBias& b) {
  if (b.vsb < 0.0) {
    throw DomainError("source-bulk junction forward biased (vsb < 0)");
  }
  if (b.vds < 0.0) {
    throw DomainError("vds must be non-negative; orient drain and source");
  }
  const double vt = threshold_voltage(p, b.vsb);
  const double vov = b.vgs - vt;
  OperatingPoint op;
  if (vov <= 0.0) return op;

  const double beta = p.beta();
  const double clm = 1.0 + p.lambda * b.vds;
  if (b.vds < vov) {
    op.id = triode_current(p, vov, b.vds);
    op.gm = beta * b.vds * clm;
    op.gds = beta * ((vov - b.vds) * clm +
                     p.lambda * (vov - 0.5 * b.vds) * b.vds);
  } else {
    op.id = saturation_current(p, vov, b.vds);
    op.gm = beta * vov * clm;
    op.gds = 0.5 * beta * vov * vov * p.lambda;
  }
  const double dvt_dvsb =
      p.gamma > 0.0 ? p.gamma / (2.0 * std::sqrt(p.phi_f_abs2 + b.vsb)) : 0.0;
  op.gmbs = -op.gm * dvt_dvsb;
  return op;
}

double drain_current(const MosParams& p, const MosBias& b) {
  if (p.polarity == Polarity::kPmos) {
    return -operating_point(p, {-b.vgs, -b.vds, -b.vsb}).id;
  }
  return operating_point(p, b).id;
}

SmallSignal small_signal(const MosParams& p, const MosBias& b) {
  const MosBias nb = p.polarity == Polarity::kPmos
                         ? MosBias{-b.vgs, -b.vds, -b.vsb}
                         : b;
  const double vov = nb.vgs - threshold_voltage(p, nb.vsb);
  if (vov <= 0.0 || nb.vds < vov) {
    throw RegionError("small-signal model requires saturation");
  }
  const double beta = p.beta();
  SmallSignal s{};
  s.id = 0.5 * beta * vov * vov;
  s.gm = std::sqrt(2.0 * beta * s.id);
  s.rds = p.lambda > 0.0 ? 1.0 / (p.lambda * s.id)
                         : std::numeric_limits<double>::infinity();
  s.vdsat = std::sqrt(2.0 * s.id / beta);
  return s;
}

NoiseResult noise(double gm, double id, const MosParams& p,
                  const NoiseParams& n, const DeviceConstants& k) {
  require_positive(gm, "gm");
  require_positive(n.freq, "freq");
  require_positive(n.delta_f, "delta_f");
  const double kt = k.boltzmann_k * n.temperature;
  const double cox = p.cox(k);
  const double l = p.l_eff;

  const double thermal_i = 8.0 * kt * gm * (1.0 + n.eta) / 3.0;
  const double flicker_i = n.kf * std::abs(id) / (n.freq * cox * l * l);

  const double thermal_v = 8.0 * kt * (1.0 + n.eta) / (3.0 * gm);
  const double flicker_v =
      n.kf / (2.0 * n.freq * cox * p.w_eff * l * p.process_transconductance(k));

  return {(thermal_i + flicker_i) * n.delta_f,
          (thermal_v + flicker_v) * n.delta_f};
}

}  // namespace memsim::device
