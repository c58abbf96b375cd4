#pragma once

// Heterodyne emulation, moment estimation and inversion, correlation
// functions, classical bounds, bootstrap errors, herald budget and gain
// calibration.

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spdc/errors.hpp"
#include "spdc/random.hpp"
#include "spdc/temporal.hpp"

namespace spdc::tomo {

using Complex = std::complex<double>;
using temporal::NumberDistribution;

enum class SampleKind { noise_only, unconditional, conditional };
std::string to_string(SampleKind kind);
SampleKind sample_kind_from_string(const std::string& s);

struct SampleSet {
  std::vector<Complex> samples;  // temporal-mode heterodyne values, linear units
  SampleKind kind = SampleKind::unconditional;
  double gain = 1.0;
  std::string chunk_id = "0";
  std::uint64_t seed = 0;
};

/// DataError on empty or non-finite sets, or gain <= 0.
void validate(const SampleSet& set);

/// Phase-symmetric single-mode state: a photon-number mixture convolved with
/// a classical Gaussian P-function of mean `thermal_excess` quanta.
struct PhaseSymmetricState {
  NumberDistribution number{{1.0}};
  double thermal_excess = 0.0;

  static PhaseSymmetricState thermal(double mean);
  static PhaseSymmetricState fock(int n);
  static PhaseSymmetricState poisson(double mean);  // phase-averaged coherent state
  static PhaseSymmetricState from(NumberDistribution d);
  double mean() const;
};

/// DataError unless the number part is non-negative and sums to 1 within 1e-8.
void validate(const PhaseSymmetricState& state);

/// One Gaussian P-function component of a classical optical-microwave pair:
/// <|alpha|^2> = n_a, <|gamma|^2> = n_c, <alpha^* gamma> = correlation.
struct GaussianComponent {
  double weight = 1.0;
  double n_a = 0.0;
  double n_c = 0.0;
  Complex correlation = 0.0;
};

struct ClassicalGaussianState {
  std::vector<GaussianComponent> components;
};

/// DomainError unless every component covariance is positive semidefinite
/// and the weights form a probability vector.
void validate(const ClassicalGaussianState& state);

/// Random mixture of one to three positive-P components.
ClassicalGaussianState random_classical_state(rng::Engine& gen);

/// alpha = sqrt(G) (beta + gamma): beta from the Husimi function of the state,
/// gamma complex Gaussian with E|gamma|^2 = n_add.
SampleSet sample_heterodyne(const PhaseSymmetricState& state, double n_add, double gain, std::size_t n,
                            std::uint64_t seed, SampleKind kind = SampleKind::unconditional);

/// Optical P-intensities |alpha|^2 (click weights) with the matching
/// microwave heterodyne samples.
struct JointSamples {
  std::vector<double> optical_intensity;
  SampleSet microwave;
};
JointSamples sample_joint(const ClassicalGaussianState& state, double n_add, double gain, std::size_t n,
                          std::uint64_t seed);

/// m(i, j) = <X^dag^i X^j>. `std_error` holds the Monte-Carlo standard error of
/// each entry (zero for exact matrices).
struct MomentsMatrix {
  Eigen::MatrixXcd m;
  Eigen::MatrixXd std_error;
  std::size_t count = 0;
  bool unphysical = false;
  std::vector<std::string> warnings;

  int order() const { return static_cast<int>(m.rows()) - 1; }
  Complex operator()(int i, int j) const { return m(i, j); }
  double real(int i, int j) const { return m(i, j).real(); }
};

MomentsMatrix raw_moments(const SampleSet& set, int max_order = 2);
MomentsMatrix raw_moments(const std::vector<Complex>& samples, int max_order = 2);
/// sum_k w_k (S_k^*)^i S_k^j / sum_k w_k, for click-weighted conditioning.
MomentsMatrix weighted_moments(const std::vector<Complex>& samples, const std::vector<double>& weights,
                               int max_order = 2);

/// Anti-normally ordered thermal noise moments, m!(n_th_H + 1)^m on the diagonal.
MomentsMatrix noise_moments(double n_th_h, int max_order = 2);

/// n_th_H = S_11 / G - 1 from a noise-only set.
double estimate_noise_occupation(const SampleSet& noise);

/// Normally ordered moments of a phase-symmetric state.
MomentsMatrix state_moments(const PhaseSymmetricState& state, int max_order = 2);

/// S_ij = G^((i+j)/2) sum_{m<=i, n<=j} C(i,m) C(j,n) H_{i-m,j-n} C_mn.
MomentsMatrix compose_moments(const MomentsMatrix& c, double gain, const MomentsMatrix& h);
/// Inverse of compose_moments by back-substitution in increasing i + j.
MomentsMatrix invert_moments(const MomentsMatrix& s, double gain, const MomentsMatrix& h);

struct CorrelationResult {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_bootstrap = 0;
};

CorrelationResult g2_cc(const MomentsMatrix& c);
CorrelationResult g2_cc_click(const MomentsMatrix& c_click);
/// C_11|click / C_11.
CorrelationResult g2_ac(const MomentsMatrix& c_click, const MomentsMatrix& c_uncond);

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

struct BoundCheckOptions {
  double n_add = 0.0;  // ideal heterodyne; the vacuum unit remains
  double gain = 1.0;
  std::size_t batches = 50;  // jackknife blocks for the standard errors
  double sigmas = 4.0;
};

struct BoundReport {
  Estimate g2_ac, g2_aa, g2_cc, g2_cc_click;
  Estimate cauchy_schwarz_margin;  // sqrt(g2_aa g2_cc) - g2_ac
  Estimate click_margin;           // g2_cc_click - 1
  bool cauchy_schwarz_ok = true;
  bool click_ok = true;
  bool passed() const noexcept { return cauchy_schwarz_ok && click_ok; }
};

/// Heterodyne pipeline on P-function draws of a classical pair. A bound is
/// violated when its margin is below -sigmas standard errors.
BoundReport classical_bound_check(const ClassicalGaussianState& state, std::size_t n, std::uint64_t seed,
                                  const BoundCheckOptions& options = {});

// Bootstrap over one or more sample sets; the statistic sees the raw moments
// of each resampled set.
using MomentStatistic = std::function<double(const std::vector<MomentsMatrix>& raw)>;

struct BootstrapOptions {
  std::size_t n_boot = 100000;
  std::uint64_t seed = 0;
  int max_order = 2;
  std::size_t bins = 100;
  std::vector<std::size_t> trace_points;  // empty: 1-2-5 steps up to n_boot
  double max_drop_fraction = 0.01;
};

struct Histogram {
  std::vector<double> edges;  // bins + 1
  std::vector<std::size_t> counts;
};

/// Error bars below and above the bootstrap mean from the first n_boot replicates.
struct ConvergencePoint {
  std::size_t n_boot = 0;
  double err_low = 0.0;
  double err_high = 0.0;
};

struct BootstrapResult {
  CorrelationResult result;  // value: statistic of the full data
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t dropped = 0;
  Histogram histogram;
  std::vector<ConvergencePoint> trace;
  std::vector<double> replicates;
};

/// Errors below and above `mean` covering 34.1% of the mass of `values` on
/// each side of it.
std::pair<double, double> error_band(std::vector<double> values, double mean);

/// Percentile bootstrap. The interval covers 34.1% of the replicate mass on
/// each side of the replicate mean. Replicates where the statistic is not
/// finite or throws DegenerateError are dropped; more than max_drop_fraction
/// drops raises DegenerateError.
BootstrapResult bootstrap(const std::vector<const SampleSet*>& sets, const MomentStatistic& statistic,
                          const BootstrapOptions& options);
BootstrapResult bootstrap(const SampleSet& set, const MomentStatistic& statistic, const BootstrapOptions& options);

/// Statistics commonly bootstrapped: g2 of the inverted moments of set 0
/// (gain and noise fixed), and g2_AC from sets 0 (click) and 1 (unconditional).
MomentStatistic g2_statistic(double gain, const MomentsMatrix& h);
MomentStatistic g2_ac_statistic(double gain_click, const MomentsMatrix& h_click, double gain_uncond,
                                const MomentsMatrix& h_uncond);

struct Chunk {
  std::string id;
  SampleSet conditional;
  SampleSet unconditional;
  std::optional<SampleSet> noise;
};

struct ChunkedMoments {
  MomentsMatrix conditional;
  MomentsMatrix unconditional;
  std::vector<double> weights_conditional;
  std::vector<double> weights_unconditional;
};

/// Inverts one set against its noise reference (H from the estimated n_th_H).
MomentsMatrix invert_set(const SampleSet& set, const SampleSet& noise, int max_order = 2);

/// Per-chunk inversion, then record-count weighted averages. DataError names
/// any chunk without a noise reference.
ChunkedMoments chunked_inversion(const std::vector<Chunk>& chunks, int max_order = 2);
/// All records pooled and inverted with one gain and one pooled noise estimate.
ChunkedMoments pooled_inversion(const std::vector<Chunk>& chunks, double gain, int max_order = 2);

/// Bootstrapped correlations of a chunked data set. Each chunk's noise
/// reference fixes its H (the noise records are not resampled); every
/// resample inverts each chunk with its own gain and averages by record count.
struct TomographyReport {
  ChunkedMoments moments;
  BootstrapResult g2_cc;        // unconditional
  BootstrapResult g2_cc_click;  // conditional
  BootstrapResult g2_ac;
  std::vector<std::string> warnings;
};

TomographyReport analyze_chunks(const std::vector<Chunk>& chunks, const BootstrapOptions& options);

struct HeraldInputs {
  double signal_rate = 0.0;   // Hz, count rates inside the gate
  double thermal_rate = 0.0;
  double dcr = 0.0;
  double leak_rate = 0.0;
  double gate = 320e-9;       // s
  double rep_rate = 50e3;     // Hz
};

/// In-gate rates that reproduce the published click budget.
HeraldInputs reference_herald_inputs();

struct HeraldBudget {
  double signal = 0.0;  // fractions of p_click
  double thermal = 0.0;
  double dcr = 0.0;
  double leak = 0.0;
  double p_click = 0.0;  // per trial
  double r_click = 0.0;  // Hz
  double true_pair_fraction() const noexcept { return signal + thermal; }
  double noise_fraction() const noexcept { return dcr + leak; }
};

HeraldBudget herald_budget(double signal_rate, double thermal_rate, double dcr, double leak_rate, double gate,
                           double rep_rate);
HeraldBudget herald_budget(const HeraldInputs& in);

struct GainCalibration {
  double gain = 0.0;
  double gain_db = 0.0;
  double n_b_sig = 0.0;
  double p_in_device = 0.0;  // W, from the acoustic occupation
  double input_ratio = 0.0;  // p_in_device / P_in
};

/// Rates in Hz (not angular). CalibrationError when kappa_e_b == kappa_i_b.
GainCalibration calibrate_gain(double r, double r_o, double p_in, double p_det, double kappa_e_b,
                               double kappa_i_b, double omega_b);

/// Heralded (true-pair clicks) and unconditional temporal-mode states.
struct ExperimentStates {
  PhaseSymmetricState heralded;
  PhaseSymmetricState unconditional;
};

/// From a simulation run without noise clicks.
ExperimentStates experiment_states(const temporal::HeraldedSimulation& sim);

struct ExperimentOptions {
  std::size_t conditional = 91000;
  std::size_t unconditional = 1400000;
  std::size_t noise = 1400000;
  std::size_t chunks = 1;
  double n_add = 2.5;
  double gain = 1.0;
  std::vector<double> chunk_gains;  // optional per-chunk override of `gain`
};

enum class ClickSource { signal, thermal, dcr, leak };
std::string to_string(ClickSource s);

struct ClickLog {
  std::vector<ClickSource> sources;  // one per conditional record
  std::size_t counts[4] = {0, 0, 0, 0};
  double pump_trials = 0.0;  // trials implied by p_click
};

struct Experiment {
  std::vector<Chunk> chunks;
  ClickLog clicks;
};

/// Conditional records draw their source from the budget: signal and thermal
/// clicks sample the heralded state, dark counts and leakage the unconditional one.
Experiment synthesize_experiment(const ExperimentStates& states, const HeraldBudget& budget,
                                 const ExperimentOptions& options, std::uint64_t seed);

Experiment simulate_experiment(const model::SystemParams& params, const model::PulseProfile& pulse,
                               const engine::BathSchedule& baths, const temporal::TemporalEnvelope& env,
                               const HeraldBudget& budget, const ExperimentOptions& options, std::uint64_t seed,
                               temporal::SimulationOptions sim_options = {});

// CSV (re_v, im_v, kind, chunk_id) with a JSON sidecar (kind, gain, seed,
// chunk_id, count, config_hash) at sidecar_path(csv).
std::string sidecar_path(const std::string& csv_path);
void write_sample_set(const std::string& csv_path, const SampleSet& set, const std::string& config_hash = {});
SampleSet read_sample_set(const std::string& csv_path);
void write_histogram_csv(const std::string& path, const Histogram& h);
void write_convergence_csv(const std::string& path, const std::vector<ConvergencePoint>& trace);

}  // namespace spdc::tomo
