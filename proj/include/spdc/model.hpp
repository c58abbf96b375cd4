#pragma once

// Physical parameterization of the piezo-optomechanical transducer. All rates
// and frequencies here are ordinary frequencies (Hz); the engine converts them
// to angular frequency exactly once, in engine::Rates.

#include "spdc/fock.hpp"

namespace spdc::model {

struct SystemParams {
  double g_om = 270e3;       // single-photon optomechanical coupling
  double g_pe = 800e3;       // piezoelectric coupling
  double kappa_e_a = 650e6;  // optical external linewidth
  double kappa_i_a = 650e6;  // optical intrinsic linewidth
  double kappa_i_b = 150e3;  // acoustic intrinsic linewidth
  double kappa_e_c = 1.2e6;  // microwave external linewidth
  double kappa_i_c = 550e3;  // microwave intrinsic linewidth
  double omega_b = 5.001e9;  // acoustic mode frequency
  double omega_c = 5.001e9;  // microwave mode frequency
  double delta_a = 5.001e9;  // pump detuning (blue sideband: delta_a = omega_b)
  double n_th_w = 0.0;       // waveguide thermal occupation

  double kappa_a() const noexcept { return kappa_e_a + kappa_i_a; }
  double kappa_c() const noexcept { return kappa_e_c + kappa_i_c; }
  double acoustic_microwave_detuning() const noexcept { return omega_b - omega_c; }

  /// Throws ParameterError on negative linewidths or non-finite values.
  void validate() const;
};

struct PulseProfile {
  double t_p_fwhm = 160e-9;  // FWHM of the intra-cavity photon number
  double n_a_peak = 0.8;
  double t_center = 0.0;
  double rep_period = 20e-6;  // 50 kHz repetition

  void validate() const;
};

struct HybridizedModes {
  double omega_plus = 0.0;   // Hz
  double omega_minus = 0.0;  // Hz
  double beat_period = 0.0;  // s, 1 / (omega_plus - omega_minus)
};

enum class Coupling { resonant, detuned };

/// Acoustic-microwave detuning used for the far-detuned bath-calibration condition.
inline constexpr double kDetunedOffsetHz = 12e6;

SystemParams reference_device();
PulseProfile reference_pulse();

/// Copy of `params` with omega_b placed on (resonant) or 12 MHz above
/// (detuned) the microwave mode.
SystemParams with_coupling(SystemParams params, Coupling coupling, double detuned_offset_hz = kDetunedOffsetHz);

HybridizedModes hybridized_modes(const SystemParams& params);

/// Gaussian intra-cavity photon number n_a(t).
double pump_occupation(double t, const PulseProfile& pulse);
/// Closed-form time integral of n_a(t).
double pump_occupation_integral(const PulseProfile& pulse);

/// Effective phonon-addition rate Gamma_om(t) = 4 n_a(t) g_om^2 / kappa_a, in Hz.
double scattering_rate(double t, const SystemParams& params, const PulseProfile& pulse);
/// Integrated jump probability over the pulse, i.e. the time integral of the
/// angular scattering rate.
double integrated_jump_probability(const SystemParams& params, const PulseProfile& pulse);

/// Two-mode (acoustic, microwave) Hamiltonian H/h in Hz, rotating frame of the
/// microwave mode: (omega_b - omega_c) b^dag b - g_pe (b^dag c + b c^dag).
fock::Operator engine_hamiltonian(const SystemParams& params, const fock::ModeDims& dims);

}  // namespace spdc::model
