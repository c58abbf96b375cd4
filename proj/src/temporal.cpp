#include "spdc/temporal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spdc/errors.hpp"
#include "spdc/io.hpp"

namespace spdc::temporal {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr std::size_t kNormPoints = 20001;  // odd, for Simpson

double trapezoid_weight(std::size_t i, std::size_t n, double h) {
  return (i == 0 || i + 1 == n) ? 0.5 * h : h;
}

void require_uniform(const std::vector<double>& x, const char* what) {
  if (x.size() < 2) throw RangeError(std::string(what) + ": at least two nodes are required");
  const double h = x[1] - x[0];
  if (!(h > 0.0)) throw RangeError(std::string(what) + ": nodes must be increasing");
  for (std::size_t i = 2; i < x.size(); ++i) {
    if (std::abs((x[i] - x[i - 1]) - h) > 1e-9 * h) throw RangeError(std::string(what) + ": nodes must be uniform");
  }
}

// Index range [first, last] of nodes x_i with lo <= x_i <= hi, tolerant to rounding.
std::pair<std::size_t, std::size_t> node_range(const std::vector<double>& x, double lo, double hi) {
  const double h = x[1] - x[0];
  const double eps = 1e-9 * h;
  const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil((lo - x.front() - eps) / h)));
  const auto last = static_cast<std::size_t>(
      std::min(static_cast<double>(x.size() - 1), std::floor((hi - x.front() + eps) / h)));
  return {first, last};
}

void check_coverage(const std::vector<double>& t_nodes, const std::vector<double>& tau_nodes,
                    const FilterFunction& filter, double t, const char* what) {
  const double h = t_nodes[1] - t_nodes[0];
  const double lo = t + filter.lo, hi = t + filter.hi;
  const double eps = 1e-9 * h;
  if (lo < t_nodes.front() - eps || hi > t_nodes.back() + eps ||
      filter.hi - filter.lo > tau_nodes.back() + 1e-9 * (tau_nodes[1] - tau_nodes[0])) {
    throw RangeError(std::string(what) + ": correlator grid does not cover the filter support at t = " +
                     std::to_string(t));
  }
}

}  // namespace

double magnitude_profile(double t, const TemporalEnvelope& env) {
  const double tg = env.t_g;
  return std::pow(kTwoPi * tg * tg, -0.25) * std::exp(-t * t / (4.0 * tg * tg)) *
         std::sqrt(1.0 + std::erf(env.alpha * t / (std::sqrt(2.0) * tg)));
}

Complex envelope(double t, const TemporalEnvelope& env) {
  if (t < env.support_lo() || t > env.support_hi()) return 0.0;
  const double g = env.scale * magnitude_profile(t, env) / std::sqrt(2.0);
  const Complex plus = std::polar(1.0, -(kTwoPi * env.omega_plus * t + 0.5 * env.phi_o));
  const Complex minus = std::polar(1.0, -(kTwoPi * env.omega_minus * t - 0.5 * env.phi_o));
  return g * (plus + minus);
}

double envelope_norm(const TemporalEnvelope& env) {
  const double lo = env.support_lo(), hi = env.support_hi();
  const double h = (hi - lo) / static_cast<double>(kNormPoints - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < kNormPoints; ++i) {
    const double w = (i == 0 || i + 1 == kNormPoints) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * std::norm(envelope(lo + static_cast<double>(i) * h, env));
  }
  return sum * h / 3.0;
}

TemporalEnvelope normalized(TemporalEnvelope env) {
  if (!(env.t_g > 0.0) || !(env.window > 0.0)) throw ParameterError("envelope: t_g and window must be positive");
  if (!std::isfinite(env.alpha) || !std::isfinite(env.phi_o)) throw ParameterError("envelope: non-finite shape");
  env.scale = 1.0;
  const double norm = envelope_norm(env);
  if (!(norm > 0.0)) throw DegenerateError("envelope: zero norm over the support");
  env.scale = 1.0 / std::sqrt(norm);
  return env;
}

TemporalEnvelope make_envelope(const model::SystemParams& params, double t_g, double alpha, double phi_o) {
  const auto modes = model::hybridized_modes(params);
  TemporalEnvelope env;
  env.t_g = t_g;
  env.alpha = alpha;
  env.phi_o = phi_o;
  env.omega_plus = modes.omega_plus - params.omega_c;
  env.omega_minus = modes.omega_minus - params.omega_c;
  return normalized(env);
}

double herald_phase(double t_j, const TemporalEnvelope& env) {
  return env.phi_o + kTwoPi * (env.omega_plus - env.omega_minus) * t_j;
}

FilterFunction as_filter(const TemporalEnvelope& env) {
  return {[env](double t) { return envelope(t, env); }, env.support_lo(), env.support_hi()};
}

double temporal_occupation(const engine::CorrelatorGrid& grid, const FilterFunction& filter, double t,
                           double kappa_e_c_hz, std::size_t quadrature_points) {
  require_uniform(grid.t_nodes, "temporal_occupation");
  require_uniform(grid.tau_nodes, "temporal_occupation");
  check_coverage(grid.t_nodes, grid.tau_nodes, filter, t, "temporal_occupation");
  const double kappa = kTwoPi * kappa_e_c_hz;
  Complex sum = 0.0;
  if (quadrature_points > 0) {
    if (quadrature_points < 2) throw RangeError("temporal_occupation: need at least two quadrature points");
    const std::size_t q = quadrature_points;
    const double span = filter.hi - filter.lo;
    const double h = span / static_cast<double>(q - 1);
    const double t_lo = std::max(t + filter.lo, grid.t_nodes.front());
    for (std::size_t i = 0; i < q; ++i) {
      const double tp = std::min(t_lo + static_cast<double>(i) * h, grid.t_nodes.back());
      const Complex fs = std::conj(filter.f(tp - t));
      if (fs == Complex(0.0)) continue;
      const double wi = trapezoid_weight(i, q, h);
      for (std::size_t j = 0; j < q; ++j) {
        const double tau = std::min(static_cast<double>(j) * h, grid.tau_nodes.back());
        if (tp + tau - t > filter.hi) break;
        const Complex fv = filter.f(tp + tau - t);
        sum += wi * trapezoid_weight(j, q, h) * grid.at(tp, tau) * fv * fs;
      }
    }
    return 2.0 * kappa * sum.real();
  }
  const double ht = grid.t_step(), hu = grid.tau_step();
  const auto [first, last] = node_range(grid.t_nodes, t + filter.lo, t + filter.hi);
  const std::size_t nt = grid.t_nodes.size(), nu = grid.tau_nodes.size();
  for (std::size_t i = first; i <= last; ++i) {
    const double tp = grid.t_nodes[i];
    const Complex fs = std::conj(filter.f(tp - t));
    if (fs == Complex(0.0)) continue;
    const double wi = trapezoid_weight(i, nt, ht);
    for (std::size_t j = 0; j < nu; ++j) {
      const double s = tp + grid.tau_nodes[j] - t;
      if (s > filter.hi) break;
      sum += wi * trapezoid_weight(j, nu, hu) * grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
             filter.f(s) * fs;
    }
  }
  return 2.0 * kappa * sum.real();
}

double temporal_occupation(const engine::CorrelatorGrid& grid, const TemporalEnvelope& env, double t,
                           double kappa_e_c_hz, std::size_t quadrature_points) {
  return temporal_occupation(grid, as_filter(env), t, kappa_e_c_hz, quadrature_points);
}

EmissionKernel::EmissionKernel(const engine::RegressionRows& rows, const FilterFunction& filter,
                               std::vector<double> out_times, double kappa_e_c_hz)
    : out_times_(std::move(out_times)) {
  require_uniform(rows.t_nodes, "EmissionKernel");
  require_uniform(rows.tau_nodes, "EmissionKernel");
  const std::size_t nt = rows.t_nodes.size(), nu = rows.tau_nodes.size();
  const double ht = rows.t_nodes[1] - rows.t_nodes[0], hu = rows.tau_nodes[1] - rows.tau_nodes[0];
  const double kappa = kTwoPi * kappa_e_c_hz;
  const auto n_out = static_cast<Eigen::Index>(out_times_.size());
  kb_ = fock::Matrix::Zero(n_out, static_cast<Eigen::Index>(nt));
  kc_ = fock::Matrix::Zero(n_out, static_cast<Eigen::Index>(nt));
  for (Eigen::Index o = 0; o < n_out; ++o) {
    const double t = out_times_[static_cast<std::size_t>(o)];
    check_coverage(rows.t_nodes, rows.tau_nodes, filter, t, "EmissionKernel");
    const auto [first, last] = node_range(rows.t_nodes, t + filter.lo, t + filter.hi);
    for (std::size_t i = first; i <= last; ++i) {
      const double tp = rows.t_nodes[i];
      const Complex fs = std::conj(filter.f(tp - t));
      if (fs == Complex(0.0)) continue;
      const double wi = trapezoid_weight(i, nt, ht);
      Complex acc_b = 0.0, acc_c = 0.0;
      const auto ii = static_cast<Eigen::Index>(i);
      for (std::size_t j = 0; j < nu; ++j) {
        const double s = tp + rows.tau_nodes[j] - t;
        if (s > filter.hi) break;
        const Complex w = trapezoid_weight(j, nu, hu) * filter.f(s);
        acc_b += w * rows.r_b(ii, static_cast<Eigen::Index>(j));
        acc_c += w * rows.r_c(ii, static_cast<Eigen::Index>(j));
      }
      kb_(o, ii) = 2.0 * kappa * wi * fs * acc_b;
      kc_(o, ii) = 2.0 * kappa * wi * fs * acc_c;
    }
  }
}

std::vector<double> EmissionKernel::spliced_trace(const std::vector<engine::Moments>& unconditional,
                                                  const std::vector<engine::Moments>& conditional,
                                                  std::size_t first_conditional) const {
  const auto nt = static_cast<std::size_t>(kb_.cols());
  if (unconditional.size() != nt || conditional.size() != nt) {
    throw DimensionError("EmissionKernel: one moment matrix per start time is required");
  }
  Eigen::VectorXcd nbc(kb_.cols()), ncc(kb_.cols());
  for (std::size_t i = 0; i < nt; ++i) {
    const auto& n = i >= first_conditional ? conditional[i] : unconditional[i];
    nbc(static_cast<Eigen::Index>(i)) = n(0, 1);
    ncc(static_cast<Eigen::Index>(i)) = n(1, 1);
  }
  const Eigen::VectorXcd v = kb_ * nbc + kc_ * ncc;
  std::vector<double> out(out_times_.size());
  for (std::size_t o = 0; o < out.size(); ++o) out[o] = v(static_cast<Eigen::Index>(o)).real();
  return out;
}

std::vector<double> EmissionKernel::trace(const std::vector<engine::Moments>& moments) const {
  return spliced_trace(moments, moments, 0);
}

std::string to_string(TraceKind kind) {
  return kind == TraceKind::unconditional ? "unconditional" : "conditional";
}

Gate default_gate(const model::PulseProfile& pulse) {
  return {pulse.t_center - pulse.t_p_fwhm, pulse.t_center + pulse.t_p_fwhm};
}

double NumberDistribution::mean() const { return factorial_moment(1); }

double NumberDistribution::factorial_moment(int k) const {
  if (k < 0) throw ParameterError("factorial_moment: order must be non-negative");
  double sum = 0.0;
  for (std::size_t n = static_cast<std::size_t>(k); n < p.size(); ++n) {
    double f = 1.0;
    for (int r = 0; r < k; ++r) f *= static_cast<double>(n) - r;
    sum += f * p[n];
  }
  return sum;
}

double NumberDistribution::g2() const {
  const double m = mean();
  if (!(m > 0.0)) throw DegenerateError("g2: distribution has zero mean");
  return factorial_moment(2) / (m * m);
}

NumberDistribution binomial_dilution(const NumberDistribution& in, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ParameterError("binomial_dilution: eta must lie in [0, 1]");
  NumberDistribution out;
  out.p.assign(in.p.size(), 0.0);
  for (std::size_t n = 0; n < in.p.size(); ++n) {
    if (in.p[n] == 0.0) continue;
    // Binomial(n, eta) by recurrence in log space to stay finite for large n.
    for (std::size_t m = 0; m <= n; ++m) {
      const double log_c = std::lgamma(n + 1.0) - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0);
      const double em = m == 0 ? 0.0 : static_cast<double>(m) * std::log(eta);
      const double er = n == m ? 0.0 : static_cast<double>(n - m) * std::log1p(-eta);
      out.p[m] += in.p[n] * std::exp(log_c + em + er);
    }
  }
  return out;
}

NumberDistribution thermal_distribution(double mean, double tail) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw ParameterError("thermal_distribution: mean must be >= 0");
  if (!(tail > 0.0 && tail < 1.0)) throw ParameterError("thermal_distribution: tail must lie in (0, 1)");
  NumberDistribution d;
  if (mean == 0.0) {
    d.p = {1.0};
    return d;
  }
  const double x = mean / (1.0 + mean);
  double pn = 1.0 / (1.0 + mean), remaining = 1.0;
  while (remaining > tail && d.p.size() < 100000) {
    d.p.push_back(pn);
    remaining -= pn;
    pn *= x;
  }
  return d;
}

namespace {

engine::Moments wick_jump(const engine::Moments& n) {
  const Complex w = 1.0 + n(0, 0);
  const Eigen::Vector2cd u = n.col(0) + Eigen::Vector2cd(1.0, 0.0);
  engine::Moments out = n + u * u.adjoint() / w;
  return 0.5 * (out + out.adjoint());
}

// Moments at time t from the stored node trajectory: evolve from the last node at or before t.
engine::Moments moments_at(const engine::MomentTrajectory& traj, const engine::Model& m, double t) {
  const auto& ts = traj.times;
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  if (it == ts.begin()) throw RangeError("moments_at: time precedes the simulated window");
  const auto k = static_cast<std::size_t>(std::distance(ts.begin(), it) - 1);
  if (t == ts[k]) return traj.moments[k];
  return engine::evolve_moments(traj.moments[k], m, {ts[k], t}).moments.back();
}

}  // namespace

HeraldedSimulation simulate_heralded(const model::SystemParams& params, const model::PulseProfile& pulse,
                                     const engine::BathSchedule& baths, const TemporalEnvelope& env,
                                     const Gate& gate, const std::vector<double>& delays,
                                     const SimulationOptions& options) {
  if (delays.empty()) throw RangeError("simulate_heralded: no output delays");
  if (!(gate.t_end > gate.t_start)) throw RangeError("simulate_heralded: empty gate");
  if (options.grid_t < 2 || options.grid_tau < 2) throw RangeError("simulate_heralded: grids need two nodes");
  if (options.jump_samples < 1) throw RangeError("simulate_heralded: need at least one jump sample");
  const double noise = options.dcr_fraction + options.leak_fraction;
  if (options.dcr_fraction < 0.0 || options.leak_fraction < 0.0 || noise > 1.0) {
    throw ParameterError("simulate_heralded: noise fractions must be >= 0 and sum to at most 1");
  }
  const engine::Model m(params, pulse, baths, options.dims);
  const auto filter = as_filter(env);
  const double gc = gate.centre();
  std::vector<double> out_times(delays.size());
  for (std::size_t i = 0; i < delays.size(); ++i) out_times[i] = gc + delays[i];
  const auto [dmin, dmax] = std::minmax_element(out_times.begin(), out_times.end());
  const double t_lo = std::min(*dmin + filter.lo, gate.t_start);
  const double t_hi = std::max(*dmax + filter.hi, gate.t_end);
  const double ht = (t_hi - t_lo) / static_cast<double>(options.grid_t - 1);
  const double hu = (filter.hi - filter.lo) / static_cast<double>(options.grid_tau - 1);
  auto t_nodes = engine::uniform_grid(t_lo, ht, options.grid_t);
  t_nodes.back() = t_hi;
  auto tau_nodes = engine::uniform_grid(0.0, hu, options.grid_tau);
  tau_nodes.back() = filter.hi - filter.lo;

  const auto rows = engine::regression_rows(m, t_nodes, tau_nodes);
  const EmissionKernel kernel(rows, filter, out_times, params.kappa_e_c);
  const auto unc = engine::evolve_moments(engine::stationary_moments(m, t_lo), m, t_nodes);

  HeraldedSimulation sim;
  sim.delays = delays;
  sim.gate_centre = gc;
  sim.noise_fraction = noise;
  sim.unconditional = kernel.trace(unc.moments);
  sim.moments = unc;

  const std::size_t nj = options.jump_samples;
  const double hj = nj > 1 ? (gate.t_end - gate.t_start) / static_cast<double>(nj - 1) : 0.0;
  double weight_sum = 0.0;
  for (std::size_t k = 0; k < nj; ++k) {
    JumpSample js;
    js.t_j = nj > 1 ? gate.t_start + static_cast<double>(k) * hj : gc;
    js.moments_before = moments_at(unc, m, js.t_j);
    const double rate = m.gamma_om(js.t_j) * (1.0 + js.moments_before(0, 0).real());
    js.weight = (nj > 1 ? trapezoid_weight(k, nj, hj) : gate.t_end - gate.t_start) * rate;
    weight_sum += js.weight;
    js.moments_after = wick_jump(js.moments_before);

    const auto first = static_cast<std::size_t>(
        std::distance(t_nodes.begin(), std::lower_bound(t_nodes.begin(), t_nodes.end(), js.t_j)));
    std::vector<engine::Moments> cond = unc.moments;
    if (first < t_nodes.size()) {
      const bool on_node = t_nodes[first] == js.t_j;
      std::vector<double> times;
      if (!on_node) times.push_back(js.t_j);
      times.insert(times.end(), t_nodes.begin() + static_cast<long>(first), t_nodes.end());
      const auto ct = engine::evolve_moments(js.moments_after, m, times);
      const std::size_t offset = on_node ? 0 : 1;
      for (std::size_t i = first; i < t_nodes.size(); ++i) cond[i] = ct.moments[i - first + offset];
    }
    js.trace = kernel.spliced_trace(unc.moments, cond, first);

    if (rate > 0.0) {
      const auto rho_j = engine::jump_condition(engine::gaussian_state(options.dims, js.moments_before));
      js.total_number = fock::total_number_distribution(rho_j);
    }
    sim.jumps.push_back(std::move(js));
  }
  sim.jump_probability = weight_sum;

  sim.conditional = sim.unconditional;
  if (weight_sum > 0.0) {
    for (auto& js : sim.jumps) js.weight /= weight_sum;
    for (std::size_t o = 0; o < delays.size(); ++o) {
      double signal = 0.0;
      for (const auto& js : sim.jumps) signal += js.weight * js.trace[o];
      sim.conditional[o] = (1.0 - noise) * signal + noise * sim.unconditional[o];
    }
  } else {
    // No scattering in the gate: every click is noise.
    sim.noise_fraction = 1.0;
  }
  sim.peak_index = static_cast<std::size_t>(
      std::distance(sim.conditional.begin(), std::max_element(sim.conditional.begin(), sim.conditional.end())));
  sim.tau_o = delays[sim.peak_index];
  const double u = sim.unconditional[sim.peak_index];
  if (!(u > 0.0)) throw DegenerateError("simulate_heralded: unconditional occupation vanishes at the peak");
  sim.g2_ac_peak = sim.conditional[sim.peak_index] / u;
  return sim;
}

ConditionalIntensityTrace conditional_trace(const model::SystemParams& params, const model::PulseProfile& pulse,
                                            const engine::BathSchedule& baths, const TemporalEnvelope& env,
                                            const Gate& gate, double dcr_fraction, double leak_fraction,
                                            const std::vector<double>& delays) {
  SimulationOptions opts;
  opts.dcr_fraction = dcr_fraction;
  opts.leak_fraction = leak_fraction;
  const auto sim = simulate_heralded(params, pulse, baths, env, gate, delays, opts);
  return {sim.delays, sim.conditional, TraceKind::conditional};
}

G2Bracket conditional_g2_bracket(const model::SystemParams& params, const model::PulseProfile& pulse,
                                 const engine::BathSchedule& baths, const HeraldedSimulation& sim,
                                 const SimulationOptions& options) {
  if (sim.jumps.empty()) throw DataError("conditional_g2_bracket: simulation has no jump samples");
  const engine::Model m(params, pulse, baths, options.dims);
  const double target = sim.gate_centre + sim.tau_o;
  const double n_u = moments_at(sim.moments, m, target)(1, 1).real();
  double nb = 0.0, nb2 = 0.0, nc = 0.0, nc2 = 0.0, wsum = 0.0;
  for (const auto& js : sim.jumps) {
    if (js.weight <= 0.0) continue;
    const auto rho_j = engine::jump_condition(engine::gaussian_state(options.dims, js.moments_before));
    NumberDistribution pb{fock::number_distribution(rho_j, 0)};
    nb += js.weight * pb.mean();
    nb2 += js.weight * pb.factorial_moment(2);
    wsum += js.weight;
    if (target > js.t_j) {
      const auto traj = engine::evolve(rho_j, m, {js.t_j, target});
      NumberDistribution pc{fock::number_distribution(traj.states.back(), 1)};
      nc += js.weight * pc.mean();
      nc2 += js.weight * pc.factorial_moment(2);
    } else {
      // Jump after the readout time: the microwave mode is still unconditional.
      nc += js.weight * n_u;
      nc2 += js.weight * 2.0 * n_u * n_u;
    }
  }
  if (!(wsum > 0.0)) throw DegenerateError("conditional_g2_bracket: no scattering in the gate");
  G2Bracket out;
  out.g2_bb_click = (nb2 / wsum) / ((nb / wsum) * (nb / wsum));

  // Noise clicks leave the unconditional microwave state at the readout time.
  const double f = sim.noise_fraction;
  const double mean = (1.0 - f) * nc / wsum + f * n_u;
  const double second = (1.0 - f) * nc2 / wsum + f * 2.0 * n_u * n_u;
  out.g2_cc_click = second / (mean * mean);
  return out;
}

ExportedStates export_temporal_states(const HeraldedSimulation& sim) {
  if (sim.unconditional.empty()) throw DataError("export_temporal_states: empty simulation");
  const std::size_t k = sim.peak_index;
  ExportedStates out;
  out.unconditional = thermal_distribution(sim.unconditional[k]);
  const double f = sim.noise_fraction;
  std::vector<double> mix(out.unconditional.p.size(), 0.0);
  for (std::size_t n = 0; n < mix.size(); ++n) mix[n] = f * out.unconditional.p[n];
  for (const auto& js : sim.jumps) {
    if (js.weight <= 0.0 || f >= 1.0) continue;
    const double quanta = js.moments_after(0, 0).real() + js.moments_after(1, 1).real();
    const double eta = js.trace[k] / quanta;
    if (eta > 1.0 + 1e-9) {
      throw DomainError("export_temporal_states: temporal-mode occupation exceeds the quanta of the heralded state");
    }
    const auto diluted = binomial_dilution({js.total_number}, std::min(1.0, std::max(0.0, eta)));
    if (diluted.p.size() > mix.size()) mix.resize(diluted.p.size(), 0.0);
    for (std::size_t n = 0; n < diluted.p.size(); ++n) mix[n] += (1.0 - f) * js.weight * diluted.p[n];
  }
  out.heralded.p = std::move(mix);
  return out;
}

void write_traces_csv(const std::string& path, const std::vector<ConditionalIntensityTrace>& traces) {
  io::CsvWriter w(path, {"delay_s", "quanta", "kind"});
  for (const auto& tr : traces) {
    if (tr.delays.size() != tr.values.size()) throw DimensionError("write_traces_csv: delay/value size mismatch");
    for (std::size_t i = 0; i < tr.delays.size(); ++i) {
      w.row({io::format_number(tr.delays[i]), io::format_number(tr.values[i]), to_string(tr.kind)});
    }
  }
  w.close();
}

void write_envelope_csv(const std::string& path, const TemporalEnvelope& env, std::size_t points) {
  if (points < 2) throw RangeError("write_envelope_csv: need at least two points");
  io::CsvWriter w(path, {"t", "re_f", "im_f"});
  const double lo = env.support_lo(), hi = env.support_hi();
  for (std::size_t i = 0; i < points; ++i) {
    const double t = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    const Complex f = envelope(t, env);
    w.row({io::format_number(t), io::format_number(f.real()), io::format_number(f.imag())});
  }
  w.close();
}

}  // namespace spdc::temporal
