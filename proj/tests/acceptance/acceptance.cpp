// Acceptance run: one line per criterion, tolerances fixed below.
//
//   acceptance [--only 3,5a] [--expect-red 1]
//
// Exit status is 0 when the set of failing criteria equals the --expect-red
// set (empty by default).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdc/bathfit.hpp"
#include "spdc/config.hpp"
#include "spdc/moments.hpp"
#include "spdc/tomography.hpp"

using namespace spdc;
using fock::ModeDims;
using tomo::PhaseSymmetricState;
using tomo::SampleKind;

#ifndef SPDC_DEFAULT_CONFIG
#define SPDC_DEFAULT_CONFIG "data/defaults.conf"
#endif

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

config::RunConfig reference_config() { return config::build(config::parse_file(SPDC_DEFAULT_CONFIG)); }

// ---------------------------------------------------------------------------
// 1: thermal temporal mode through the full pipeline.

Outcome thermal_pipeline() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = 1000000;
  const double gain = 1e9, n_add = 2.5, nbar = 0.3;
  const auto sig = tomo::sample_heterodyne(PhaseSymmetricState::thermal(nbar), n_add, gain, n, 1);
  const auto noise =
      tomo::sample_heterodyne(PhaseSymmetricState::thermal(0.0), n_add, gain, n, 2, SampleKind::noise_only);
  const double g = tomo::g2_cc(tomo::invert_set(sig, noise)).value;
  const double secs = seconds_since(t0);
  // Spread of the estimator at this sample size, and its mean over
  // independent repetitions, for the record.
  const auto h = tomo::noise_moments(tomo::estimate_noise_occupation(noise));
  const auto b = tomo::bootstrap(sig, tomo::g2_statistic(gain, h), {200, 3});
  const int reps = 20;
  double s = 0.0, ss = 0.0;
  for (int r = 0; r < reps; ++r) {
    const auto x = tomo::sample_heterodyne(PhaseSymmetricState::thermal(nbar), n_add, gain, n, 1000 + 2 * r);
    const auto y = tomo::sample_heterodyne(PhaseSymmetricState::thermal(0.0), n_add, gain, n, 1001 + 2 * r,
                                           SampleKind::noise_only);
    const double v = tomo::g2_cc(tomo::invert_set(x, y)).value;
    s += v;
    ss += v * v;
  }
  const double mean = s / reps, sd = std::sqrt((ss - reps * mean * mean) / (reps - 1));
  return {std::abs(g - 2.0) <= 0.02 && secs < 60.0,
          fmt("g2_CC = %.4f (target 2 +/- 0.02), pipeline %.1f s (limit 60 s); bootstrap sd %.3f; "
              "%d further runs: mean %.3f +/- %.3f, sd %.3f",
              g, secs, b.stddev, reps, mean, sd / std::sqrt(reps), sd)};
}

// ---------------------------------------------------------------------------
// 2: compose then invert.

Outcome inversion_round_trip() {
  tomo::MomentsMatrix c;
  c.m.resize(3, 3);
  c.m(0, 0) = 1.0;
  c.m(0, 1) = {0.1, 0.05};
  c.m(0, 2) = {0.02, -0.03};
  c.m(1, 1) = 0.3;
  c.m(1, 2) = {0.04, 0.01};
  c.m(2, 2) = 0.18;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < i; ++j) c.m(i, j) = std::conj(c.m(j, i));
  }
  c.std_error = Eigen::MatrixXd::Zero(3, 3);
  const auto h = tomo::noise_moments(2.5);
  double worst = 0.0;
  for (double gain : {1.0, 12.5, 1e9}) {
    const auto back = tomo::invert_moments(tomo::compose_moments(c, gain, h), gain, h);
    worst = std::max(worst, (back.m - c.m).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, fmt("max |C - inv(compose(C))| = %.2e over G in {1, 12.5, 1e9} (tol 1e-12)", worst)};
}

// ---------------------------------------------------------------------------
// 3: photon-added thermal state.

// Direct Fock sum: p_n of the truncated thermal state, q_n = n p_{n-1}.
std::pair<double, double> photon_added_by_sum(double nbar, int dim) {
  std::vector<double> p(dim);
  const double x = nbar / (nbar + 1.0);
  double z = 0.0;
  for (int k = 0; k < dim; ++k) z += p[k] = std::pow(x, k);
  for (auto& v : p) v /= z;
  double norm = 0.0, m1 = 0.0, m2 = 0.0;
  for (int k = 1; k < dim; ++k) {
    const double q = k * p[k - 1];
    norm += q;
    m1 += k * q;
    m2 += k * (k - 1.0) * q;
  }
  m1 /= norm;
  m2 /= norm;
  return {m1, m2 / (m1 * m1)};
}

Outcome photon_added_thermal() {
  const int dim = 40;
  bool ok = true;
  std::ostringstream os;
  double worst = 0.0;
  for (double nbar : {0.0, 0.25, 1.0}) {
    const auto [sum_mean, sum_g2] = photon_added_by_sum(nbar, dim);
    const double x = nbar / (nbar + 1.0);
    const double f_mean = 2.0 * nbar + 1.0;
    const double f_g2 = 2.0 * x * (2.0 + x) / ((1.0 + x) * (1.0 + x));

    const auto rho = fock::tensor(fock::thermal_state(dim, nbar), fock::fock_state(ModeDims{2}, {0}));
    const auto p = fock::number_distribution(engine::jump_condition(rho), 0);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      m1 += k * p[k];
      m2 += k * (k - 1.0) * p[k];
    }
    const double g2 = m2 / (m1 * m1);
    for (auto [a, b] : {std::pair{m1, sum_mean}, {g2, sum_g2}, {m1, f_mean}, {g2, f_g2}, {sum_mean, f_mean}}) {
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
      ok = ok && close(a, b, 1e-8);
    }
    os << fmt("nbar=%.2f: <n>=%.10f g2=%.10f; ", nbar, m1, g2);
  }
  return {ok, os.str() + fmt("worst deviation from Fock sum or closed form %.1e (tol 1e-8)", worst)};
}

// ---------------------------------------------------------------------------
// 4: classical states never violate the bounds.

Outcome classical_bounds() {
  const auto t0 = std::chrono::steady_clock::now();
  int cs = 0, click = 0;
  double worst_cs = 1e300, worst_click = 1e300;
  for (std::uint64_t i = 0; i < 100; ++i) {
    auto gen = rng::substream(4, i);
    const auto state = tomo::random_classical_state(gen);
    const auto r = tomo::classical_bound_check(state, 100000, rng::substream_seed(40, i));
    cs += !r.cauchy_schwarz_ok;
    click += !r.click_ok;
    worst_cs = std::min(worst_cs, r.cauchy_schwarz_margin.value / r.cauchy_schwarz_margin.sigma);
    worst_click = std::min(worst_click, r.click_margin.value / r.click_margin.sigma);
  }
  const double secs = seconds_since(t0);
  return {cs == 0 && click == 0 && secs < 600.0,
          fmt("violations beyond 4 sigma: Cauchy-Schwarz %d, click %d of 100; lowest margins %.2f and %.2f sigma; "
              "%.0f s (limit 600 s)",
              cs, click, worst_cs, worst_click, secs)};
}

// ---------------------------------------------------------------------------
// 5: engine physics.

double parabolic_peak(const std::vector<double>& t, const std::vector<double>& y, std::size_t i) {
  const double h = t[i + 1] - t[i];
  const double den = y[i - 1] - 2.0 * y[i] + y[i + 1];
  return t[i] + 0.5 * h * (y[i - 1] - y[i + 1]) / den;
}

Outcome rabi_period() {
  auto p = model::reference_device();
  p.g_om = 0.0;
  p.kappa_i_b = p.kappa_e_c = p.kappa_i_c = 0.0;
  const ModeDims dims{3, 3};
  const engine::Model m(p, model::reference_pulse(), engine::BathSchedule::constant(0.0, 0.0), dims);
  const auto grid = engine::uniform_grid(0.0, 1e-9, 1001);
  const auto traj = engine::evolve(fock::fock_state(dims, {1, 0}), m, grid, {0.0, false});
  const auto nb = m.b().adjoint() * m.b();
  std::vector<double> y;
  for (const auto& s : traj.states) y.push_back(fock::expectation(nb, s).real());
  std::size_t best = 400;
  for (std::size_t i = 400; i < 900; ++i) {
    if (y[i] > y[best]) best = i;
  }
  const double period = parabolic_peak(grid, y, best);
  const double rel = std::abs(period / 625e-9 - 1.0);
  return {rel <= 1e-3, fmt("first return of the acoustic quantum at %.3f ns vs 625 ns, rel %.1e (tol 1e-3)",
                           period * 1e9, rel)};
}

struct PulseRun {
  engine::Trajectory before;  // up to the herald at t = 0
  engine::Trajectory after;   // heralded branch
};

PulseRun full_pulse(int dim, double n_bath) {
  const ModeDims dims{dim, dim};
  const engine::Model m(model::reference_device(), model::reference_pulse(), engine::BathSchedule::constant(n_bath, n_bath),
                        dims);
  const double t_start = -1.0e-6;
  const auto rho0 = engine::gaussian_state(dims, engine::stationary_moments(m, t_start));
  PulseRun r;
  r.before = engine::evolve(rho0, m, engine::uniform_grid(t_start, 10e-9, 101));
  r.after = engine::evolve(engine::jump_condition(r.before.states.back()), m, engine::uniform_grid(0.0, 10e-9, 201));
  return r;
}

Outcome pulse_invariants(const PulseRun& r) {
  const double drift = std::max(r.before.max_trace_drift, r.after.max_trace_drift);
  const double eig = std::min(r.before.min_eigenvalue, r.after.min_eigenvalue);
  return {drift < 1e-8 && eig > -1e-8,
          fmt("10x10, -1 us to 2 us with a herald at 0: trace drift %.1e (tol 1e-8), min eigenvalue %.1e (tol -1e-8)",
              drift, eig)};
}

Outcome truncation(const PulseRun& small, const PulseRun& big) {
  double worst = 0.0;
  const auto compare = [&](const engine::Trajectory& a, const engine::Trajectory& b) {
    for (std::size_t i = 0; i < a.states.size(); ++i) {
      const auto na = engine::moments_of(a.states[i]);
      const auto nb = engine::moments_of(b.states[i]);
      for (int k = 0; k < 2; ++k) {
        worst = std::max(worst, std::abs(na(k, k).real() / nb(k, k).real() - 1.0));
      }
    }
  };
  compare(small.before, big.before);
  compare(small.after, big.after);
  return {worst < 1e-4, fmt("max relative change of <b^dag b>, <c^dag c> from 10x10 to 12x12: %.1e (tol 1e-4)", worst)};
}

Outcome correlator_grid() {
  const auto t0 = std::chrono::steady_clock::now();
  const ModeDims dims{10, 10};
  const engine::Model m(model::reference_device(), model::reference_pulse(), engine::BathSchedule::constant(0.228, 0.228),
                        dims);
  const double h = 10e-9, t_start = -0.8e-6;
  const auto rho0 = engine::gaussian_state(dims, engine::stationary_moments(m, t_start));
  const auto traj = engine::evolve(rho0, m, engine::uniform_grid(t_start, h, 399), {0.0, false});
  const auto starts = engine::uniform_grid(t_start, h, 200);
  const auto g = engine::two_time_correlator(m, traj, m.c().adjoint(), m.c(), starts, engine::uniform_grid(0.0, h, 200));
  const double secs = seconds_since(t0);
  // Zero-delay column against the equal-time occupation.
  double worst = 0.0;
  const auto nc = m.c().adjoint() * m.c();
  for (std::size_t i = 0; i < starts.size(); ++i) {
    const double direct = fock::expectation(nc, traj.states[i]).real();
    worst = std::max(worst, std::abs(g.values(static_cast<Eigen::Index>(i), 0).real() - direct));
  }
  return {secs < 600.0 && worst < 1e-10 && g.values.allFinite(),
          fmt("200x200 Fock-space grid in %.0f s (limit 600 s); tau=0 column vs <c^dag c>: %.1e", secs, worst)};
}

// ---------------------------------------------------------------------------
// 6, 7: reference-parameter simulation.

// Unconditional <b^dag b> averaged over the gate for a constant bath n.
double gate_average_nb(const config::RunConfig& cfg, double n) {
  const engine::Model m(cfg.device, cfg.pulse, engine::BathSchedule::constant(n, n, cfg.device.n_th_w), {2, 2});
  const auto gate = temporal::default_gate(cfg.pulse);
  const std::size_t k = 65;
  const double t0 = gate.t_start - 1.2e-6;
  std::vector<double> grid{t0};
  for (std::size_t i = 0; i < k; ++i) {
    grid.push_back(gate.t_start + (gate.t_end - gate.t_start) * static_cast<double>(i) / (k - 1.0));
  }
  const auto traj = engine::evolve_moments(engine::stationary_moments(m, t0), m, grid);
  double s = 0.0;
  for (std::size_t i = 1; i <= k; ++i) s += (i == 1 || i == k ? 0.5 : 1.0) * traj.moments[i](0, 0).real();
  return s / (k - 1.0);
}

double tuned_bath(const config::RunConfig& cfg) {
  double lo = 0.0, hi = 2.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (gate_average_nb(cfg, mid) < 0.097 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

config::RunConfig tuned_config() {
  auto cfg = reference_config();
  const double n = tuned_bath(cfg);
  cfg.bath_mode = config::BathMode::constant;
  cfg.n_th_b = cfg.n_th_c = n;
  return cfg;
}

Outcome reference_simulation(const config::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto budget = tomo::herald_budget(cfg.budget);
  const auto options = cfg.simulation_options(budget);
  const auto baths = cfg.baths();
  const auto sim = temporal::simulate_heralded(cfg.device, cfg.pulse, baths, cfg.envelope(),
                                               temporal::default_gate(cfg.pulse), cfg.simulation.delays(), options);
  const auto bracket = temporal::conditional_g2_bracket(cfg.device, cfg.pulse, baths, sim, options);
  const double g_mode = temporal::export_temporal_states(sim).heralded.g2();
  const bool range = sim.g2_ac_peak >= 3.4 && sim.g2_ac_peak <= 4.5;
  const bool ordered = bracket.g2_bb_click <= g_mode && g_mode <= bracket.g2_cc_click;
  const bool overlap = std::max(bracket.g2_bb_click, 0.24) < std::min(bracket.g2_cc_click, 0.77);
  return {range && ordered && overlap,
          fmt("bath n=%.4f (gate <b^dag b> = %.4f); tau_o=%.0f ns; g2_AC=%.3f in [3.4, 4.5]; "
              "g2_bb|click(0)=%.3f <= g2_CC|click=%.3f <= g2_cc|click=%.3f; overlaps (0.24, 0.77): %s; %.1f s",
              cfg.n_th_b, gate_average_nb(cfg, cfg.n_th_b), sim.tau_o * 1e9, sim.g2_ac_peak, bracket.g2_bb_click,
              g_mode, bracket.g2_cc_click, overlap ? "yes" : "no", seconds_since(t0))};
}

// Strictly decreasing, and the last point has closed at least 75% of the
// initial distance to 2 (from either side).
Outcome power_sweep_property(const config::RunConfig& cfg) {
  const auto pts = config::power_sweep(cfg, {0.8, 2.0, 5.0, 12.0});
  bool decreasing = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0 && !(pts[i].g2_ac < pts[i - 1].g2_ac)) decreasing = false;
    os << fmt("n_a=%g: %.3f; ", pts[i].n_a, pts[i].g2_ac);
  }
  const double first = std::abs(pts.front().g2_ac - 2.0), last = std::abs(pts.back().g2_ac - 2.0);
  const bool approaches = last <= 0.25 * first;
  return {decreasing && approaches,
          os.str() + fmt("strictly decreasing: %s; |g2-2| %.3f -> %.3f (limit 0.25x)", decreasing ? "yes" : "no",
                         first, last)};
}

// ---------------------------------------------------------------------------
// 8: herald budget.

Outcome herald_budget_table() {
  const auto b = tomo::herald_budget(tomo::reference_herald_inputs());
  const double got[4] = {b.signal, b.thermal, b.dcr, b.leak};
  const double want[4] = {0.727, 0.069, 0.171, 0.033};
  bool ok = true;
  for (int i = 0; i < 4; ++i) ok = ok && std::lround(got[i] * 1000.0) == std::lround(want[i] * 1000.0);
  const std::string p = fmt("%.1e", b.p_click);
  ok = ok && p == "2.7e-06";
  return {ok, fmt("fractions %.3f %.3f %.3f %.3f (want 0.727 0.069 0.171 0.033), p_click %s (want 2.7e-06)", got[0],
                  got[1], got[2], got[3], p.c_str())};
}

// ---------------------------------------------------------------------------
// 9: bath-fit round trips.

Outcome bath_fit() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = model::reference_device();
  const auto pulse = model::reference_pulse();
  const auto env = temporal::make_envelope(p);
  std::vector<double> d;
  for (int i = 0; i <= 140; ++i) d.push_back(-0.5e-6 + 25e-9 * i);
  const auto knots = bathfit::default_knot_times(pulse, 3e-6);
  std::vector<engine::BathKnot> kb, kc;
  for (double t : knots) {
    const double s = t - knots.front();
    const double f = (1.0 - std::exp(-s / 150e-9)) * std::exp(-s / 5e-6);
    kb.push_back({t, 0.02 + 0.25 * f});
    kc.push_back({t, 0.01 + 0.1 * f});
  }
  const engine::BathSchedule truth(kb, kc, 0.0);
  const auto td = bathfit::forward_emission(truth, p, pulse, env, model::Coupling::detuned, d);
  const auto tr = bathfit::forward_emission(truth, p, pulse, env, model::Coupling::resonant, d);

  const auto worst_knot = [&](const bathfit::FitReport& rep) {
    double w = 0.0;
    for (std::size_t i = 0; i < knots.size(); ++i) {
      w = std::max(w, std::abs(rep.baths.knots_b()[i].n / kb[i].n - 1.0));
      w = std::max(w, std::abs(rep.baths.knots_c()[i].n / kc[i].n - 1.0));
    }
    return w;
  };
  const double clean = worst_knot(bathfit::fit_baths(td, tr, knots, p, pulse, env));
  double noisy = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    auto nd = td, nr = tr;
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sd = 0.01 * *std::max_element(td.quanta.begin(), td.quanta.end());
    const double sr = 0.01 * *std::max_element(tr.quanta.begin(), tr.quanta.end());
    for (auto& q : nd.quanta) q += sd * gauss(gen);
    for (auto& q : nr.quanta) q += sr * gauss(gen);
    noisy = std::max(noisy, worst_knot(bathfit::fit_baths(nd, nr, knots, p, pulse, env)));
  }
  const double secs = seconds_since(t0);
  return {clean <= 0.05 && noisy <= 0.15 && secs < 1800.0,
          fmt("worst knot error: noiseless %.2e (tol 0.05), 1%% noise over 3 draws %.3f (tol 0.15); %.0f s "
              "(limit 1800 s)",
              clean, noisy, secs)};
}

// ---------------------------------------------------------------------------
// 10: bootstrap.

Outcome bootstrap_coverage() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t reps = 200, n = 100000, n_boot = 400;
  const double n_add = 2.5;
  const auto h = tomo::noise_moments(n_add);
  std::vector<int> covered(reps, 0);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto set = tomo::sample_heterodyne(PhaseSymmetricState::thermal(1.0), n_add, 1.0, n,
                                             rng::substream_seed(10, 2 * r));
    const auto b = tomo::bootstrap(set, tomo::g2_statistic(1.0, h), {n_boot, rng::substream_seed(10, 2 * r + 1)});
    covered[r] = b.result.ci_low <= 2.0 && 2.0 <= b.result.ci_high;
  }
  const double frac = std::accumulate(covered.begin(), covered.end(), 0.0) / static_cast<double>(reps);
  return {frac >= 0.63 && frac <= 0.73,
          fmt("2 inside the interval in %.1f%% of %zu thermal repetitions (N=%zu, %zu resamples; want 63-73%%); %.0f s",
              100.0 * frac, reps, n, n_boot, seconds_since(t0))};
}

// dev_k = |w(n_k) - w(n_max)| for trace points n_k >= 1e3, w the half-width.
// Monotone: dev_{k+1} <= dev_k + s(n_{k+1}), where s(n) is the spread of
// half-widths over disjoint 1000-replicate batches scaled by sqrt(1000 / n).
Outcome bootstrap_convergence() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n_boot = 100000, batch = 1000;
  const auto set = tomo::sample_heterodyne(PhaseSymmetricState::thermal(1.0), 2.5, 1.0, 10000, 11);
  tomo::BootstrapOptions o{n_boot, 12};
  o.trace_points = {1000, 2000, 5000, 10000, 20000, 50000, 100000};
  const auto b = tomo::bootstrap(set, tomo::g2_statistic(1.0, tomo::noise_moments(2.5)), o);

  std::vector<double> widths;
  for (std::size_t k = 0; k + batch <= b.replicates.size(); k += batch) {
    std::vector<double> part(b.replicates.begin() + static_cast<long>(k),
                             b.replicates.begin() + static_cast<long>(k + batch));
    part.erase(std::remove_if(part.begin(), part.end(), [](double v) { return !std::isfinite(v); }), part.end());
    const double mean = std::accumulate(part.begin(), part.end(), 0.0) / static_cast<double>(part.size());
    const auto [lo, hi] = tomo::error_band(part, mean);
    widths.push_back(0.5 * (lo + hi));
  }
  const double wm = std::accumulate(widths.begin(), widths.end(), 0.0) / static_cast<double>(widths.size());
  double ss = 0.0;
  for (double w : widths) ss += (w - wm) * (w - wm);
  const double sd_batch = std::sqrt(ss / static_cast<double>(widths.size() - 1));

  const auto half = [](const tomo::ConvergencePoint& p) { return 0.5 * (p.err_low + p.err_high); };
  const double w_final = half(b.trace.back());
  bool ok = true;
  std::ostringstream os;
  double prev = -1.0;
  for (const auto& p : b.trace) {
    const double dev = std::abs(half(p) - w_final);
    const double s = sd_batch * std::sqrt(static_cast<double>(batch) / static_cast<double>(p.n_boot));
    if (prev >= 0.0 && dev > prev + s) ok = false;
    prev = dev;
    os << fmt("%zu:%.4f ", p.n_boot, half(p));
  }
  return {ok, "half-width trace " + os.str() +
                  fmt("; batch spread %.4f at 1000; monotone within spread: %s; %.0f s", sd_batch, ok ? "yes" : "no",
                      seconds_since(t0))};
}

Outcome full_scale_interval(const config::RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto budget = tomo::herald_budget(cfg.budget);
  tomo::ExperimentOptions eo;
  eo.conditional = 91000;
  eo.unconditional = cfg.tomo.unconditional;
  eo.noise = cfg.tomo.noise;
  eo.n_add = cfg.tomo.n_add;
  eo.gain = cfg.tomo.gain;
  const auto ex = tomo::simulate_experiment(cfg.device, cfg.pulse, cfg.baths(), cfg.envelope(), budget, eo, 3,
                                            cfg.simulation_options(budget));
  const auto& chunk = ex.chunks.at(0);
  const auto h = tomo::noise_moments(tomo::estimate_noise_occupation(*chunk.noise));
  const auto b = tomo::bootstrap(chunk.conditional, tomo::g2_statistic(chunk.conditional.gain, h), {2000, 5});
  const double half = 0.5 * (b.result.ci_high - b.result.ci_low);
  return {half >= 0.15 && half <= 0.45,
          fmt("g2_CC|click = %.3f +%.3f -%.3f from %zu records; half-width %.3f in [0.15, 0.45]; %.0f s",
              b.result.value, b.result.ci_high - b.result.value, b.result.value - b.result.ci_low,
              chunk.conditional.samples.size(), half, seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<std::string> only, expect_red;
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--expect-red", expect_red, "Criteria known to fail")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  const std::set<std::string> selected(only.begin(), only.end());
  const auto wanted = [&](const std::string& id) { return selected.empty() || selected.count(id) > 0; };
  std::set<std::string> failed, expected;
  for (const auto& id : expect_red) {
    if (wanted(id)) expected.insert(id);
  }
  const auto report = [&](const std::string& id, const std::string& what, const std::function<Outcome()>& run) {
    if (!wanted(id)) return;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) failed.insert(id);
    std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << what << ": " << o.detail
              << fmt(" [%.1f s]", seconds_since(t0)) << std::endl;
  };

  report("1", "thermal pipeline", thermal_pipeline);
  report("2", "moment-inversion round trip", inversion_round_trip);
  report("3", "photon-added thermal analytics", photon_added_thermal);
  report("4", "classical bounds", classical_bounds);
  report("5a", "Rabi swap period", rabi_period);
  if (wanted("5b") || wanted("5c")) {
    const auto small = full_pulse(10, 0.228);
    report("5b", "trace and positivity over a pulse", [&] { return pulse_invariants(small); });
    if (wanted("5c")) {
      const auto big = full_pulse(12, 0.228);
      report("5c", "truncation sensitivity", [&] { return truncation(small, big); });
    }
  }
  report("5d", "two-time correlator grid", correlator_grid);
  if (wanted("6") || wanted("7") || wanted("10c")) {
    const auto cfg = tuned_config();
    report("6", "reference-parameter simulation", [&] { return reference_simulation(cfg); });
    report("7", "power sweep", [&] { return power_sweep_property(cfg); });
    report("10c", "full-scale conditional interval", [&] { return full_scale_interval(cfg); });
  }
  report("8", "herald budget", herald_budget_table);
  report("9", "bath-fit round trip", bath_fit);
  report("10a", "bootstrap coverage", bootstrap_coverage);
  report("10b", "bootstrap convergence", bootstrap_convergence);

  std::cout << "failing: " << failed.size();
  for (const auto& id : failed) std::cout << ' ' << id;
  std::cout << "; expected red: " << expected.size();
  for (const auto& id : expected) std::cout << ' ' << id;
  std::cout << '\n';
  return failed == expected ? 0 : 1;
}
