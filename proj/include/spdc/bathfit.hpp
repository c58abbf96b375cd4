#pragma once

// Inversion of bath occupations n_th,b(t), n_th,c(t) from unconditional
// microwave emission traces, and the heating-dynamics scaling fits.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "spdc/errors.hpp"
#include "spdc/temporal.hpp"

namespace spdc::bathfit {

struct EmissionTrace {
  std::vector<double> delays;  // s, relative to the pulse centre
  std::vector<double> quanta;
  model::Coupling condition = model::Coupling::resonant;
  model::PulseProfile pump;
};

/// Simulated unconditional temporal-mode trace. Moment backend; the condition
/// selects the acoustic-microwave detuning through model::with_coupling.
EmissionTrace forward_emission(const engine::BathSchedule& baths, const model::SystemParams& params,
                               const model::PulseProfile& pulse, const temporal::TemporalEnvelope& env,
                               model::Coupling condition, const std::vector<double>& delays);

/// forward_emission with the bath-independent work (regression rows and
/// emission kernel) done once. Fixed knot times make the trace affine in the
/// knot occupations; `affine()` exposes that map.
class EmissionModel {
 public:
  EmissionModel(const model::SystemParams& params, const model::PulseProfile& pulse,
                const temporal::TemporalEnvelope& env, model::Coupling condition, std::vector<double> delays,
                std::size_t grid_t = 200, std::size_t grid_tau = 200);

  std::vector<double> trace(const engine::BathSchedule& baths) const;

  /// trace = offset + design * [n_b knots; n_c knots]; the offset is the
  /// response to n_th,w alone.
  struct Affine {
    Eigen::MatrixXd design;
    Eigen::VectorXd offset;
  };
  Affine affine(const std::vector<double>& knot_times_b, const std::vector<double>& knot_times_c,
                double n_th_w) const;

  const std::vector<double>& delays() const noexcept { return delays_; }
  model::Coupling condition() const noexcept { return condition_; }

 private:
  model::SystemParams params_;
  model::PulseProfile pulse_;
  model::Coupling condition_;
  std::vector<double> delays_;
  std::vector<double> t_nodes_;
  double step_ = 0.0;  // bath-independent integrator step
  engine::RegressionRows rows_;
  std::unique_ptr<temporal::EmissionKernel> kernel_;
};

/// Default knot placement: one pre-pulse knot at onset (t_center - t_p_fwhm),
/// then count - 1 knots log-spaced from onset + first_offset to `horizon`.
std::vector<double> default_knot_times(const model::PulseProfile& pulse, double horizon, std::size_t count = 8,
                                       double first_offset = 200e-9);

struct FitOptions {
  std::size_t max_sweeps = 400;
  double tolerance = 1e-12;  // relative objective change that ends the descent
  double line_tolerance = 1e-9;  // golden-section bracket, relative to the knot scale
  double n_th_w = 0.0;
  std::size_t grid_t = 200;
  std::size_t grid_tau = 200;
};

struct StageResidual {
  std::string stage;   // "detuned", "resonant", "joint"
  double rms = 0.0;    // quanta
  std::size_t sweeps = 0;
};

struct FitReport {
  engine::BathSchedule baths = engine::BathSchedule::constant(0.0, 0.0, 0.0);
  double residual = 0.0;  // RMS over both traces after the joint pass
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<bool> active_b;  // knot clamped at zero
  std::vector<bool> active_c;
  std::vector<StageResidual> stages;
};

/// Raised when coordinate descent exhausts its sweeps; carries the best fit.
class FitConvergenceError : public ConvergenceError {
 public:
  FitConvergenceError(const std::string& what, FitReport best) : ConvergenceError(what), best_(std::move(best)) {}
  const FitReport& best() const noexcept { return best_; }

 private:
  FitReport best_;
};

/// Two-stage fit (n_th,c from the detuned trace, then n_th,b from the
/// resonant trace) followed by a joint pass over both. Knot times are shared
/// between the two baths.
FitReport fit_baths(const EmissionTrace& trace_detuned, const EmissionTrace& trace_resonant,
                    const std::vector<double>& knot_times, const model::SystemParams& params,
                    const model::PulseProfile& pulse, const temporal::TemporalEnvelope& env,
                    const FitOptions& options = {});

/// Derivative-free minimizer used by fit_baths: cyclic coordinate descent with
/// golden-section line searches on x >= 0, plus a pattern move along each
/// sweep's net displacement. Returns sweeps used; throws ConvergenceError if
/// `max_sweeps` is reached (x holds the best point found).
std::size_t coordinate_descent(const std::function<double(const Eigen::VectorXd&)>& objective, Eigen::VectorXd& x,
                               double scale, std::size_t max_sweeps, double tolerance, double line_tolerance);

struct PowerLawFit {
  double exponent = 0.0;
  double prefactor = 0.0;
  double stderr_exponent = 0.0;
};

/// Ordinary least squares of log(occupation) on log(power).
PowerLawFit fit_power_law(const std::vector<double>& powers, const std::vector<double>& occupations);

struct SlowDecayFit {
  double tau_decay = 0.0;  // s; NaN when unidentifiable
  double amplitude = 0.0;
  double offset = 0.0;
  double stderr_tau = 0.0;
  bool identifiable = true;
};

/// y(T) = offset + amplitude * exp(-T / tau) by Levenberg-Marquardt. Flat data
/// returns amplitude 0 with identifiable = false.
SlowDecayFit fit_slow_decay(const std::vector<double>& rep_periods, const std::vector<double>& pre_pulse_quanta);

struct LorentzianPeak {
  double amplitude = 0.0;  // peak height above the floor
  double centre = 0.0;     // Hz, rotating-frame offset
  double width = 0.0;      // Hz, FWHM
};

struct SpectrumFit {
  double floor = 0.0;  // waveguide occupation per unit bandwidth
  LorentzianPeak peaks[2];
  double rms = 0.0;
  double waveguide_occupation() const noexcept { return floor; }
};

/// floor + sum of two Lorentzians fitted to a power spectral density in
/// quanta per unit bandwidth. Initial peaks at the two largest local maxima
/// unless a guess is supplied.
SpectrumFit fit_double_lorentzian(const std::vector<double>& freqs_hz, const std::vector<double>& psd);
SpectrumFit fit_double_lorentzian(const std::vector<double>& freqs_hz, const std::vector<double>& psd,
                                  const SpectrumFit& guess);
double double_lorentzian(double f, const SpectrumFit& fit);

/// Normally ordered output-field spectrum (quanta per unit bandwidth) of the
/// linearized model with baths frozen at time t: the waveguide input plus
/// sqrt(kappa_e,c) c.
std::vector<double> output_spectrum(const model::SystemParams& params, const model::PulseProfile& pulse,
                                     const engine::BathSchedule& baths, double t,
                                     const std::vector<double>& freqs_hz);

/// One double-Lorentzian fit per delay row of a spectrogram (rows = delays).
std::vector<SpectrumFit> spectral_decomposition(const std::vector<double>& freqs_hz,
                                                const std::vector<std::vector<double>>& spectrogram);

// I/O. Traces: delay_s, quanta, condition. Schedules: bath, t_s, occupation
// with bath in {b, c, w}.
std::vector<EmissionTrace> read_traces_csv(const std::string& path, const model::PulseProfile& pump);
void write_traces_csv(const std::string& path, const std::vector<EmissionTrace>& traces);
void write_schedule_csv(const std::string& path, const engine::BathSchedule& baths);
engine::BathSchedule read_schedule_csv(const std::string& path);
std::string fit_report_json(const FitReport& report);
void write_fit_report(const std::string& path, const FitReport& report);

std::string to_string(model::Coupling c);
model::Coupling coupling_from_string(const std::string& s);

}  // namespace spdc::bathfit
