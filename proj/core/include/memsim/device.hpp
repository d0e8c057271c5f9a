#pragma once

// MOS Level-1 (Sah / SPICE Level 1) large-signal, small-signal and noise
// models. Every function here is pure. Units follow the usual device-physics
// convention: lengths in cm, doping in cm^-3, capacitance per area in F/cm^2.

#include <stdexcept>
#include <string>

namespace memsim::device {

/// Raised when an input lies outside the domain of a model equation
/// (negative square-root or logarithm argument, reverse-oriented bias).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a small-signal quantity is requested outside saturation.
class RegionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DeviceConstants {
  double boltzmann_k = 1.381e-23;    // J/K
  double q_electron = 1.602e-19;     // C
  double ni_300k = 1.45e10;          // cm^-3
  double eps0 = 8.854e-14;           // F/cm
  double eps_si = 11.7 * 8.854e-14;  // F/cm
  double eps_ox = 3.9 * 8.854e-14;   // F/cm
  double silicon_bandgap_vg = 1.205; // V

  /// Silicon constants at 27 C.
  static constexpr DeviceConstants silicon() { return {}; }

  double thermal_voltage(double temperature) const {
    return boltzmann_k * temperature / q_electron;
  }

  void validate() const;
};

enum class Polarity { kNmos, kPmos };

/// Process and geometry description of one transistor. For PMOS devices the
/// threshold and body parameters are given as magnitudes.
struct MosParams {
  double mu0 = 500.0;     // cm^2/(V s)
  double tox = 2e-6;      // cm
  double w_eff = 1e-4;    // cm
  double l_eff = 1e-4;    // cm
  double vt0 = 0.5;       // V
  double gamma = 0.4;     // V^1/2
  double phi_f_abs2 = 0.7;  // V, the quantity 2|phi_F|
  double lambda = 0.04;   // 1/V
  Polarity polarity = Polarity::kNmos;

  double cox(const DeviceConstants& k = DeviceConstants::silicon()) const {
    return k.eps_ox / tox;
  }
  /// mu0 * Cox, sometimes written K'.
  double process_transconductance(
      const DeviceConstants& k = DeviceConstants::silicon()) const {
    return mu0 * cox(k);
  }
  double beta(const DeviceConstants& k = DeviceConstants::silicon()) const {
    return process_transconductance(k) * (w_eff / l_eff);
  }

  /// Parameters whose width is chosen so that beta() equals `beta`, keeping
  /// the default mobility, oxide thickness and a 1 um channel length.
  static MosParams with_beta(double beta, double vt0 = 0.5, double gamma = 0.4,
                             double phi_f_abs2 = 0.7, double lambda = 0.04);

  void validate() const;
};

struct ProcessDoping {
  double n_sub = 1e17;    // cm^-3
  double n_gate = 1e20;   // cm^-3
  double n_ss = 0.0;      // cm^-2
  double temperature = 300.0;  // K
};

struct MosBias {
  double vgs = 0.0;
  double vds = 0.0;
  double vsb = 0.0;
};

struct NoiseParams {
  double kf = 0.0;        // F A
  double eta = 0.0;       // g_mbs / g_m
  double delta_f = 1.0;   // Hz
  double freq = 1.0;      // Hz
  double temperature = 300.0;  // K
};

/// Full chain of the threshold-voltage process equations. Intermediates are
/// kept so each relation can be checked on its own.
struct ProcessResult {
  double phi_f_substrate;  // V
  double phi_f_gate;       // V
  double phi_ms;           // V
  double q_ss;             // C/cm^2
  double v_fb;             // V
  double gamma;            // V^1/2
  double vt0;              // V
  double cox;              // F/cm^2
};

struct SmallSignal {
  double gm;     // S
  double rds;    // Ohm, +inf when lambda == 0
  double vdsat;  // V
  double id;     // A, square-law saturation current without lambda
};

struct NoiseResult {
  double in_sq;    // A^2
  double veq_sq;   // V^2
};

/// Drain current together with its partial derivatives, as needed by a
/// Newton-Raphson stamp. gmbs is d(id)/d(vsb) and is <= 0 for NMOS.
struct OperatingPoint {
  double id = 0.0;
  double gm = 0.0;
  double gds = 0.0;
  double gmbs = 0.0;
};

double threshold_voltage(const MosParams& p, double vsb);

ProcessResult process_parameters(
    const ProcessDoping& d, double tox,
    const DeviceConstants& k = DeviceConstants::silicon());

/// Triode-region current (valid for vds < vgs - VT).
double triode_current(const MosParams& p, double vov, double vds);
/// Saturation-region current (valid for vds >= vgs - VT).
double saturation_current(const MosParams& p, double vov, double vds);

/// Level-1 drain current. Zero in cutoff (vgs <= VT). NMOS requires
/// vds >= 0 and vsb >= 0; PMOS is evaluated by sign symmetry, so it expects
/// vds <= 0, vsb <= 0 and returns a non-positive current.
double drain_current(const MosParams& p, const MosBias& b);

/// Drain current and its derivatives for an NMOS-oriented bias.
OperatingPoint operating_point(const MosParams& p, const MosBias& b);

SmallSignal small_signal(const MosParams& p, const MosBias& b);

/// Thermal plus flicker channel-noise current and its input-referred voltage.
/// The input-referred form assumes gm^2 = 2 beta I_D, which holds for values
/// produced by small_signal().
NoiseResult noise(double gm, double id, const MosParams& p,
                  const NoiseParams& n,
                  const DeviceConstants& k = DeviceConstants::silicon());

}  // namespace memsim::device
