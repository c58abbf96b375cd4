#pragma once

// Matched-filter temporal mode C = sqrt(kappa_e,c) * integral c(t + t') f^*(t') dt'
// at the transducer output, and optical-click conditioned averaging.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "spdc/engine.hpp"
#include "spdc/moments.hpp"

namespace spdc::temporal {

using fock::Complex;

/// Two-bin skewed-Gaussian envelope. Frequencies are offsets (Hz) from the
/// microwave rotating frame; `scale` fixes the L2 norm over the support
/// window [-window * t_g, window * t_g], outside of which f vanishes.
struct TemporalEnvelope {
  double t_g = 230e-9;
  double alpha = 2.0;
  double omega_plus = 800e3;
  double omega_minus = -800e3;
  double phi_o = 0.0;
  double window = 5.0;
  double scale = 1.0;

  double support_lo() const noexcept { return -window * t_g; }
  double support_hi() const noexcept { return window * t_g; }
};

/// Envelope with omega_pm taken from the hybridized modes of `params`,
/// normalized numerically.
TemporalEnvelope make_envelope(const model::SystemParams& params, double t_g = 230e-9, double alpha = 2.0,
                               double phi_o = 0.0);
/// Recomputes `scale` so that the integral of |f|^2 equals one.
TemporalEnvelope normalized(TemporalEnvelope env);

/// Square root of the skewed Gaussian, before normalization.
double magnitude_profile(double t, const TemporalEnvelope& env);
Complex envelope(double t, const TemporalEnvelope& env);
/// Numerical integral of |f|^2 over the support.
double envelope_norm(const TemporalEnvelope& env);

/// phi_o + 2 pi (omega_+ - omega_-) t_J, i.e. phi_o + 2 g_pe t_J in angular units.
double herald_phase(double t_j, const TemporalEnvelope& env);

/// Any square-integrable filter with compact support.
struct FilterFunction {
  std::function<Complex(double)> f;
  double lo = 0.0;
  double hi = 0.0;
};

FilterFunction as_filter(const TemporalEnvelope& env);

/// <C^dag(t) C(t)> from <c^dag(t' + tau) c(t')> via the trapezoid rule on the
/// correlator grid nodes. When `quadrature_points` > 0 a uniform quadrature of
/// that many points per axis is used instead, with bilinear interpolation of
/// the grid. Throws RangeError if the grid does not cover the filter support.
double temporal_occupation(const engine::CorrelatorGrid& grid, const FilterFunction& filter, double t,
                           double kappa_e_c_hz, std::size_t quadrature_points = 0);
double temporal_occupation(const engine::CorrelatorGrid& grid, const TemporalEnvelope& env, double t,
                           double kappa_e_c_hz, std::size_t quadrature_points = 0);

/// Linear map from second moments at the grid start times to temporal-mode
/// occupations at fixed output times. Built once from the regression rows,
/// which do not depend on bath occupations.
class EmissionKernel {
 public:
  EmissionKernel(const engine::RegressionRows& rows, const FilterFunction& filter, std::vector<double> out_times,
                 double kappa_e_c_hz);

  const std::vector<double>& out_times() const noexcept { return out_times_; }
  std::size_t start_count() const noexcept { return static_cast<std::size_t>(kb_.cols()); }

  std::vector<double> trace(const std::vector<engine::Moments>& moments) const;
  /// Start times with index >= first_conditional use `conditional`, earlier ones `unconditional`.
  std::vector<double> spliced_trace(const std::vector<engine::Moments>& unconditional,
                                    const std::vector<engine::Moments>& conditional,
                                    std::size_t first_conditional) const;

 private:
  std::vector<double> out_times_;
  fock::Matrix kb_;  // coefficient of <b^dag c>(t_i)
  fock::Matrix kc_;  // coefficient of <c^dag c>(t_i)
};

enum class TraceKind { unconditional, conditional };
std::string to_string(TraceKind kind);

struct ConditionalIntensityTrace {
  std::vector<double> delays;  // s, relative to the gate centre
  std::vector<double> values;  // quanta
  TraceKind kind = TraceKind::conditional;
};

struct Gate {
  double t_start = -160e-9;
  double t_end = 160e-9;
  double centre() const noexcept { return 0.5 * (t_start + t_end); }
};

/// Gate of duration 2 T_p centred on the pulse.
Gate default_gate(const model::PulseProfile& pulse);

struct SimulationOptions {
  fock::ModeDims dims{10, 10};
  std::size_t jump_samples = 21;
  std::size_t grid_t = 200;
  std::size_t grid_tau = 200;
  double dcr_fraction = 0.0;
  double leak_fraction = 0.0;
};

struct JumpSample {
  double t_j = 0.0;
  double weight = 0.0;  // normalized over the gate
  engine::Moments moments_before;  // unconditional second moments at t_j
  engine::Moments moments_after;   // second moments of rho_J(t_j)
  std::vector<double> trace;       // <C^dag C>|_{t_J} at the output delays
  std::vector<double> total_number;  // total-quanta distribution of rho_J(t_j)
};

/// Photon-number distribution of a phase-symmetric single-mode state.
struct NumberDistribution {
  std::vector<double> p;
  double mean() const;
  double factorial_moment(int k) const;
  double g2() const;
};

struct HeraldedSimulation {
  std::vector<double> delays;
  std::vector<double> unconditional;
  std::vector<double> conditional;
  std::vector<JumpSample> jumps;
  engine::MomentTrajectory moments;  // unconditional, on the simulation time nodes
  double gate_centre = 0.0;
  std::size_t peak_index = 0;
  double tau_o = 0.0;
  double g2_ac_peak = 0.0;
  double noise_fraction = 0.0;
  double jump_probability = 0.0;  // integral of Gamma_om Tr{b^dag rho b} over the gate
};

/// Unconditional and click-conditioned traces on the requested delays
/// (relative to the gate centre).
HeraldedSimulation simulate_heralded(const model::SystemParams& params, const model::PulseProfile& pulse,
                                     const engine::BathSchedule& baths, const TemporalEnvelope& env,
                                     const Gate& gate, const std::vector<double>& delays,
                                     const SimulationOptions& options = {});

ConditionalIntensityTrace conditional_trace(const model::SystemParams& params, const model::PulseProfile& pulse,
                                            const engine::BathSchedule& baths, const TemporalEnvelope& env,
                                            const Gate& gate, double dcr_fraction, double leak_fraction,
                                            const std::vector<double>& delays);

/// Bracket for the conditional microwave g2: the acoustic state right after
/// the jump (lower) and the internal microwave mode at tau_o (upper), each a
/// weighted mixture over jump times. The upper value includes noise clicks.
struct G2Bracket {
  double g2_bb_click = 0.0;
  double g2_cc_click = 0.0;
};

G2Bracket conditional_g2_bracket(const model::SystemParams& params, const model::PulseProfile& pulse,
                                 const engine::BathSchedule& baths, const HeraldedSimulation& sim,
                                 const SimulationOptions& options = {});

/// Temporal-mode number distributions at tau_o: the heralded state (binomial
/// dilution of each rho_J total-number distribution to its extracted
/// occupation, mixed over jumps and with the noise-click mass) and the
/// unconditional thermal state.
struct ExportedStates {
  NumberDistribution heralded;
  NumberDistribution unconditional;
};

ExportedStates export_temporal_states(const HeraldedSimulation& sim);

/// Binomial loss channel on a number distribution.
NumberDistribution binomial_dilution(const NumberDistribution& in, double eta);
NumberDistribution thermal_distribution(double mean, double tail = 1e-14);

/// Writes delay_s, quanta, kind rows.
void write_traces_csv(const std::string& path, const std::vector<ConditionalIntensityTrace>& traces);
/// Writes t, re_f, im_f rows over the envelope support.
void write_envelope_csv(const std::string& path, const TemporalEnvelope& env, std::size_t points = 1001);

}  // namespace spdc::temporal
