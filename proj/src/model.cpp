#include "spdc/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "spdc/errors.hpp"

namespace spdc::model {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw ParameterError(std::string(name) + " is not finite");
}

void require_non_negative(double v, const char* name) {
  require_finite(v, name);
  if (v < 0.0) throw ParameterError(std::string(name) + " must be non-negative");
}

}  // namespace

void SystemParams::validate() const {
  require_finite(g_om, "g_om");
  require_finite(g_pe, "g_pe");
  require_non_negative(kappa_e_a, "kappa_e_a");
  require_non_negative(kappa_i_a, "kappa_i_a");
  require_non_negative(kappa_i_b, "kappa_i_b");
  require_non_negative(kappa_e_c, "kappa_e_c");
  require_non_negative(kappa_i_c, "kappa_i_c");
  require_finite(omega_b, "omega_b");
  require_finite(omega_c, "omega_c");
  require_finite(delta_a, "delta_a");
  require_non_negative(n_th_w, "n_th_w");
}

void PulseProfile::validate() const {
  require_finite(t_center, "t_center");
  if (!(t_p_fwhm > 0.0)) throw ParameterError("t_p_fwhm must be positive");
  require_non_negative(n_a_peak, "n_a_peak");
  if (!(rep_period > t_p_fwhm)) throw ParameterError("rep_period must exceed t_p_fwhm");
}

SystemParams reference_device() { return SystemParams{}; }

PulseProfile reference_pulse() { return PulseProfile{}; }

SystemParams with_coupling(SystemParams params, Coupling coupling, double detuned_offset_hz) {
  params.omega_b = coupling == Coupling::resonant ? params.omega_c : params.omega_c + detuned_offset_hz;
  return params;
}

HybridizedModes hybridized_modes(const SystemParams& params) {
  const double mean = 0.5 * (params.omega_b + params.omega_c);
  const double half_detuning = 0.5 * (params.omega_b - params.omega_c);
  const double half_split = std::sqrt(half_detuning * half_detuning + params.g_pe * params.g_pe);
  HybridizedModes modes;
  modes.omega_plus = mean + half_split;
  modes.omega_minus = mean - half_split;
  modes.beat_period = half_split > 0.0 ? 1.0 / (2.0 * half_split) : INFINITY;
  return modes;
}

double pump_occupation(double t, const PulseProfile& pulse) {
  const double x = (t - pulse.t_center) / pulse.t_p_fwhm;
  return pulse.n_a_peak * std::exp(-4.0 * std::numbers::ln2 * x * x);
}

double pump_occupation_integral(const PulseProfile& pulse) {
  return pulse.n_a_peak * pulse.t_p_fwhm * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
}

double scattering_rate(double t, const SystemParams& params, const PulseProfile& pulse) {
  const double kappa_a = params.kappa_a();
  if (!(kappa_a > 0.0)) throw ParameterError("scattering_rate: optical linewidth must be positive");
  // 4 |G_om|^2 / kappa_a keeps the same form in ordinary and angular units.
  return 4.0 * pump_occupation(t, pulse) * params.g_om * params.g_om / kappa_a;
}

double integrated_jump_probability(const SystemParams& params, const PulseProfile& pulse) {
  const double kappa_a = params.kappa_a();
  if (!(kappa_a > 0.0)) throw ParameterError("integrated_jump_probability: optical linewidth must be positive");
  return 2.0 * std::numbers::pi * 4.0 * params.g_om * params.g_om / kappa_a * pump_occupation_integral(pulse);
}

fock::Operator engine_hamiltonian(const SystemParams& params, const fock::ModeDims& dims) {
  if (dims.modes() != 2) throw DimensionError("engine_hamiltonian: expected (acoustic, microwave) dims");
  const auto b = fock::embed(fock::annihilation(dims[0]), 0, dims);
  const auto c = fock::embed(fock::annihilation(dims[1]), 1, dims);
  const double detuning = params.acoustic_microwave_detuning();
  fock::Matrix h = detuning * (b.adjoint() * b).matrix() -
                   params.g_pe * ((b.adjoint() * c) + (b * c.adjoint())).matrix();
  return {std::move(h), dims};
}

}  // namespace spdc::model
