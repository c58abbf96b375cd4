#include "spdc/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "spdc/errors.hpp"

namespace spdc::engine {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void validate_knots(const std::vector<BathKnot>& knots, const char* which) {
  if (knots.empty()) throw ParameterError(std::string("BathSchedule: ") + which + " needs at least one knot");
  for (std::size_t i = 0; i < knots.size(); ++i) {
    if (!std::isfinite(knots[i].t) || !std::isfinite(knots[i].n)) {
      throw ParameterError(std::string("BathSchedule: non-finite knot in ") + which);
    }
    if (knots[i].n < 0.0) throw ParameterError(std::string("BathSchedule: negative occupation in ") + which);
    if (i > 0 && !(knots[i].t > knots[i - 1].t)) {
      throw ParameterError(std::string("BathSchedule: knot times must be strictly increasing in ") + which);
    }
  }
}

fock::Operator mode_operator(const fock::ModeDims& dims, std::size_t mode) {
  if (dims.modes() != 2) throw DimensionError("Model: expected (acoustic, microwave) dims");
  return fock::embed(fock::annihilation(dims[mode]), mode, dims);
}

double max_occupation(const std::vector<BathKnot>& knots) {
  double m = 0.0;
  for (const auto& k : knots) m = std::max(m, k.n);
  return m;
}

}  // namespace

BathSchedule::BathSchedule(std::vector<BathKnot> knots_b, std::vector<BathKnot> knots_c, double n_th_w)
    : knots_b_(std::move(knots_b)), knots_c_(std::move(knots_c)), n_th_w_(n_th_w) {
  validate_knots(knots_b_, "knots_b");
  validate_knots(knots_c_, "knots_c");
  if (!(n_th_w_ >= 0.0) || !std::isfinite(n_th_w_)) throw ParameterError("BathSchedule: n_th_w must be >= 0");
}

BathSchedule BathSchedule::constant(double n_th_b, double n_th_c, double n_th_w) {
  return BathSchedule({{0.0, n_th_b}}, {{0.0, n_th_c}}, n_th_w);
}

double BathSchedule::interpolate(const std::vector<BathKnot>& knots, double t) {
  if (t <= knots.front().t) return knots.front().n;
  if (t >= knots.back().t) return knots.back().n;
  const auto it = std::upper_bound(knots.begin(), knots.end(), t,
                                   [](double value, const BathKnot& k) { return value < k.t; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (t - lo.t) / (hi.t - lo.t);
  return lo.n + w * (hi.n - lo.n);
}

double BathSchedule::max_n_b() const { return max_occupation(knots_b_); }
double BathSchedule::max_n_c() const { return max_occupation(knots_c_); }

BathSchedule BathSchedule::scaled(double factor) const {
  if (!(factor >= 0.0)) throw ParameterError("BathSchedule::scaled: factor must be >= 0");
  auto kb = knots_b_;
  auto kc = knots_c_;
  for (auto& k : kb) k.n *= factor;
  for (auto& k : kc) k.n *= factor;
  return BathSchedule(std::move(kb), std::move(kc), n_th_w_);
}

Rates Rates::from(const model::SystemParams& params) {
  params.validate();
  Rates r;
  r.g_pe = kTwoPi * params.g_pe;
  r.detuning = kTwoPi * params.acoustic_microwave_detuning();
  r.kappa_i_b = kTwoPi * params.kappa_i_b;
  r.kappa_e_c = kTwoPi * params.kappa_e_c;
  r.kappa_i_c = kTwoPi * params.kappa_i_c;
  return r;
}

Model::Model(const model::SystemParams& params, const model::PulseProfile& pulse, BathSchedule baths,
             fock::ModeDims dims)
    : params_(params),
      pulse_(pulse),
      baths_(std::move(baths)),
      dims_(std::move(dims)),
      rates_(Rates::from(params)),
      b_(mode_operator(dims_, 0)),
      c_(mode_operator(dims_, 1)) {
  pulse_.validate();
  if (params_.kappa_a() <= 0.0) throw ParameterError("Model: optical linewidth must be positive");

  const int db = dims_[0];
  const int dc = dims_[1];
  const int n = dims_.total();
  nb_.resize(n);
  nc_.resize(n);
  sqrt_nb_.resize(n);
  sqrt_nc_.resize(n);
  bbdag_.resize(n);
  ccdag_.resize(n);
  hop_a_amp_.setZero(n);
  hop_b_amp_.setZero(n);
  for (int k = 0; k < n; ++k) {
    const int ib = k / dc;
    const int ic = k % dc;
    nb_[k] = ib;
    nc_[k] = ic;
    sqrt_nb_[k] = std::sqrt(static_cast<double>(ib));
    sqrt_nc_[k] = std::sqrt(static_cast<double>(ic));
    bbdag_[k] = ib + 1 < db ? ib + 1.0 : 0.0;
    ccdag_[k] = ic + 1 < dc ? ic + 1.0 : 0.0;
    if (ib > 0 && ic + 1 < dc) hop_a_amp_[k] = std::sqrt(static_cast<double>(ib) * (ic + 1.0));
    if (ib + 1 < db && ic > 0) hop_b_amp_[k] = std::sqrt((ib + 1.0) * static_cast<double>(ic));
  }
}

double Model::gamma_om(double t) const { return kTwoPi * model::scattering_rate(t, params_, pulse_); }

DissipationRates Model::dissipation(double t) const {
  const double nb = baths_.n_b(t);
  const double nc = baths_.n_c(t);
  const double nw = baths_.n_w();
  DissipationRates d;
  d.up_b = gamma_om(t) + rates_.kappa_i_b * nb;
  d.down_b = rates_.kappa_i_b * (nb + 1.0);
  d.up_c = rates_.kappa_i_c * nc + rates_.kappa_e_c * nw;
  d.down_c = rates_.kappa_i_c * (nc + 1.0) + rates_.kappa_e_c * (nw + 1.0);
  return d;
}

double Model::max_rate() const {
  const double gamma_peak = kTwoPi * 4.0 * pulse_.n_a_peak * params_.g_om * params_.g_om / params_.kappa_a();
  const double nb = baths_.max_n_b();
  const double nc = baths_.max_n_c();
  const double nw = baths_.n_w();
  const double rate_b = gamma_peak + rates_.kappa_i_b * (2.0 * nb + 1.0);
  const double rate_c = rates_.kappa_i_c * (2.0 * nc + 1.0) + rates_.kappa_e_c * (2.0 * nw + 1.0);
  double m = std::max({std::abs(rates_.g_pe), std::abs(rates_.detuning), rate_b, rate_c});
  if (!(m > 0.0)) m = 1.0;  // trivial generator; any finite step is exact
  return m;
}

void Model::apply(double t, const Matrix& x, Matrix& out) const {
  const int n = dims_.total();
  if (x.rows() != n || x.cols() != n) throw DimensionError("Model::apply: operator size mismatch");
  out.resize(n, n);
  const int s = dims_[1];
  const auto d = dissipation(t);
  const double g = rates_.g_pe;
  const double det = rates_.detuning;

  thread_local Eigen::VectorXd decay;
  decay = d.up_b * bbdag_ + d.down_b * nb_ + d.up_c * ccdag_ + d.down_c * nc_;

  // Interleaved (re, im) column-major storage; complex products are spelled
  // out so the loops stay free of library calls.
  const double* xd = reinterpret_cast<const double*>(x.data());
  double* od = reinterpret_cast<double*>(out.data());
  const double* nb = nb_.data();
  const double* dec = decay.data();
  const double* sb = sqrt_nb_.data();
  const double* sc = sqrt_nc_.data();
  const double* ha = hop_a_amp_.data();
  const double* hb = hop_b_amp_.data();
  const std::ptrdiff_t col = 2 * static_cast<std::ptrdiff_t>(n);

  for (int j = 0; j < n; ++j) {
    const double* xj = xd + col * j;
    double* oj = od + col * j;

    // -i (H_eff x - x H_eff^dag) from the diagonal of H_eff.
    for (int i = 0; i < n; ++i) {
      const double cr = -0.5 * (dec[i] + dec[j]);
      const double ci = det * (nb[j] - nb[i]);
      const double xr = xj[2 * i], xi = xj[2 * i + 1];
      oj[2 * i] = cr * xr - ci * xi;
      oj[2 * i + 1] = cr * xi + ci * xr;
    }

    if (g != 0.0) {
      // i g (C x) with C_{i, i-s+1} = ha_i and C_{i, i+s-1} = hb_i.
      for (int i = s - 1; i < n; ++i) {
        const double a = g * ha[i];
        const double* xs = xj + 2 * (i - s + 1);
        oj[2 * i] -= a * xs[1];
        oj[2 * i + 1] += a * xs[0];
      }
      for (int i = 0; i + s - 1 < n; ++i) {
        const double a = g * hb[i];
        const double* xs = xj + 2 * (i + s - 1);
        oj[2 * i] -= a * xs[1];
        oj[2 * i + 1] += a * xs[0];
      }
      // -i g (x C).
      if (j >= s - 1 && ha[j] != 0.0) {
        const double a = g * ha[j];
        const double* xs = xd + col * (j - s + 1);
        for (int i = 0; i < n; ++i) {
          oj[2 * i] += a * xs[2 * i + 1];
          oj[2 * i + 1] -= a * xs[2 * i];
        }
      }
      if (j + s - 1 < n && hb[j] != 0.0) {
        const double a = g * hb[j];
        const double* xs = xd + col * (j + s - 1);
        for (int i = 0; i < n; ++i) {
          oj[2 * i] += a * xs[2 * i + 1];
          oj[2 * i + 1] -= a * xs[2 * i];
        }
      }
    }

    // b^dag x b and b x b^dag.
    if (d.up_b != 0.0 && j >= s && sb[j] != 0.0) {
      const double a = d.up_b * sb[j];
      const double* xs = xd + col * (j - s) - 2 * s;
      for (int i = s; i < n; ++i) {
        oj[2 * i] += a * sb[i] * xs[2 * i];
        oj[2 * i + 1] += a * sb[i] * xs[2 * i + 1];
      }
    }
    if (d.down_b != 0.0 && j + s < n) {
      const double a = d.down_b * sb[j + s];
      const double* xs = xd + col * (j + s) + 2 * s;
      for (int i = 0; i + s < n; ++i) {
        oj[2 * i] += a * sb[i + s] * xs[2 * i];
        oj[2 * i + 1] += a * sb[i + s] * xs[2 * i + 1];
      }
    }
    // c^dag x c and c x c^dag; sqrt(n_c) is zero on block edges.
    if (d.up_c != 0.0 && j >= 1 && sc[j] != 0.0) {
      const double a = d.up_c * sc[j];
      const double* xs = xd + col * (j - 1) - 2;
      for (int i = 1; i < n; ++i) {
        oj[2 * i] += a * sc[i] * xs[2 * i];
        oj[2 * i + 1] += a * sc[i] * xs[2 * i + 1];
      }
    }
    if (d.down_c != 0.0 && j + 1 < n && sc[j + 1] != 0.0) {
      const double a = d.down_c * sc[j + 1];
      const double* xs = xd + col * (j + 1) + 2;
      for (int i = 0; i + 1 < n; ++i) {
        oj[2 * i] += a * sc[i + 1] * xs[2 * i];
        oj[2 * i + 1] += a * sc[i + 1] * xs[2 * i + 1];
      }
    }
  }
}

Matrix liouvillian_apply(double t, const fock::DensityMatrix& rho, const model::SystemParams& params,
                         const model::PulseProfile& pulse, const BathSchedule& baths) {
  const Model m(params, pulse, baths, rho.dims());
  Matrix out;
  m.apply(t, rho.matrix(), out);
  return out;
}

Integrator::Integrator(const Model& model) : model_(model) {}

void Integrator::step(double t, double h, Matrix& x) {
  model_.apply(t, x, k1_);
  tmp_ = x + (0.5 * h) * k1_;
  model_.apply(t + 0.5 * h, tmp_, k2_);
  tmp_ = x + (0.5 * h) * k2_;
  model_.apply(t + 0.5 * h, tmp_, k3_);
  tmp_ = x + h * k3_;
  model_.apply(t + h, tmp_, k4_);
  x += (h / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

void Integrator::advance(Matrix& x, double t0, double t1, double max_step) {
  const double span = t1 - t0;
  if (span < 0.0) throw RangeError("Integrator::advance: t1 < t0");
  if (span == 0.0) return;
  if (!(max_step > 0.0)) throw ParameterError("Integrator::advance: max_step must be positive");
  const auto steps = static_cast<long>(std::ceil(span / max_step * (1.0 - 1e-12)));
  const long n = std::max(1L, steps);
  const double h = span / static_cast<double>(n);
  for (long s = 0; s < n; ++s) step(t0 + static_cast<double>(s) * h, h, x);
}

Trajectory evolve(const fock::DensityMatrix& rho0, const Model& model, const std::vector<double>& t_grid,
                  const EvolveOptions& options) {
  if (rho0.dims() != model.dims()) throw DimensionError("evolve: initial state dims differ from model dims");
  if (t_grid.empty()) throw RangeError("evolve: empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw RangeError("evolve: time grid must be strictly increasing");
  }
  const double h = options.max_step > 0.0 ? options.max_step : model.max_step();
  const Complex tr0 = rho0.trace();

  Trajectory traj;
  traj.times = t_grid;
  traj.states.reserve(t_grid.size());

  Integrator integ(model);
  Matrix x = rho0.matrix();
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (i > 0) integ.advance(x, t_grid[i - 1], t_grid[i], h);
    const double drift = std::abs(x.trace() - tr0);
    const double herm = (x - x.adjoint()).cwiseAbs().maxCoeff();
    if (!std::isfinite(drift) || !std::isfinite(herm) || drift > kTraceDriftLimit || herm > kHermiticityLimit) {
      throw IntegratorError("evolve: step " + std::to_string(h) + " s too coarse at t = " +
                            std::to_string(t_grid[i]) + " s (trace drift " + std::to_string(drift) +
                            ", Hermiticity error " + std::to_string(herm) + ")");
    }
    traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
    traj.max_hermiticity_error = std::max(traj.max_hermiticity_error, herm);
    fock::DensityMatrix state(x, model.dims());
    if (options.check_positivity) {
      const double lam = state.diagnostics().min_eigenvalue;
      traj.min_eigenvalue = std::min(traj.min_eigenvalue, lam);
      if (lam < fock::DensityMatrix::kEigenvalueFloor) {
        throw IntegratorError("evolve: negative eigenvalue " + std::to_string(lam) + " at t = " +
                              std::to_string(t_grid[i]) + " s");
      }
    }
    traj.states.push_back(std::move(state));
  }
  return traj;
}

fock::DensityMatrix jump_condition(const fock::DensityMatrix& rho) {
  const auto& dims = rho.dims();
  const auto b = fock::embed(fock::annihilation(dims[0]), 0, dims);
  Matrix num = b.matrix().adjoint() * rho.matrix() * b.matrix();
  const double weight = num.trace().real();
  if (!(weight > 1e-14)) {
    throw DegenerateError("jump_condition: jump weight " + std::to_string(weight) + " below 1e-14");
  }
  num /= weight;
  return {std::move(num), dims};
}

std::vector<double> uniform_grid(double start, double step, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = start + step * static_cast<double>(i);
  return g;
}

namespace {

double uniform_step(const std::vector<double>& nodes, const char* what) {
  if (nodes.size() < 2) return 0.0;
  const double h = (nodes.back() - nodes.front()) / static_cast<double>(nodes.size() - 1);
  if (!(h > 0.0)) throw RangeError(std::string(what) + " must be strictly increasing");
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    const double d = nodes[i] - nodes[i - 1];
    if (std::abs(d - h) > 1e-6 * h) throw RangeError(std::string(what) + " must be uniform");
  }
  return h;
}

// Locates x on a uniform grid: index of the left node and the fractional offset.
void locate(double x, double x0, double h, std::size_t n, std::size_t& idx, double& frac) {
  if (n == 1 || h == 0.0) {
    idx = 0;
    frac = 0.0;
    return;
  }
  double u = (x - x0) / h;
  u = std::clamp(u, 0.0, static_cast<double>(n - 1));
  idx = std::min(static_cast<std::size_t>(u), n - 2);
  frac = u - static_cast<double>(idx);
}

}  // namespace

double CorrelatorGrid::t_step() const { return uniform_step(t_nodes, "CorrelatorGrid t nodes"); }
double CorrelatorGrid::tau_step() const { return uniform_step(tau_nodes, "CorrelatorGrid tau nodes"); }

bool CorrelatorGrid::covers(double t_min, double t_max, double tau_max) const {
  if (t_nodes.empty() || tau_nodes.empty()) return false;
  const double tol_t = 1e-9 * std::max(1e-9, std::abs(t_nodes.back() - t_nodes.front()));
  const double tol_tau = 1e-9 * std::max(1e-9, tau_nodes.back());
  return t_min >= t_nodes.front() - tol_t && t_max <= t_nodes.back() + tol_t && tau_max <= tau_nodes.back() + tol_tau;
}

Complex CorrelatorGrid::at(double t, double tau) const {
  if (!covers(t, t, tau) || tau < -1e-9 * std::max(1e-9, tau_nodes.back())) {
    throw RangeError("CorrelatorGrid::at: (" + std::to_string(t) + ", " + std::to_string(tau) +
                     ") outside the correlator grid");
  }
  std::size_t i = 0, j = 0;
  double ft = 0.0, fu = 0.0;
  const double ht = t_nodes.size() > 1 ? (t_nodes.back() - t_nodes.front()) / (t_nodes.size() - 1) : 0.0;
  const double hu = tau_nodes.size() > 1 ? (tau_nodes.back() - tau_nodes.front()) / (tau_nodes.size() - 1) : 0.0;
  locate(t, t_nodes.front(), ht, t_nodes.size(), i, ft);
  locate(tau, tau_nodes.front(), hu, tau_nodes.size(), j, fu);
  const auto v = [&](std::size_t a, std::size_t b) {
    return values(static_cast<Eigen::Index>(std::min(a, t_nodes.size() - 1)),
                  static_cast<Eigen::Index>(std::min(b, tau_nodes.size() - 1)));
  };
  return (1.0 - ft) * ((1.0 - fu) * v(i, j) + fu * v(i, j + 1)) +
         ft * ((1.0 - fu) * v(i + 1, j) + fu * v(i + 1, j + 1));
}

CorrelatorGrid two_time_correlator(const Model& model, const Trajectory& trajectory,
                                   const fock::Operator& op_left, const fock::Operator& op_right,
                                   const std::vector<double>& start_times, const std::vector<double>& tau_grid,
                                   double max_step) {
  if (tau_grid.empty() || start_times.empty()) throw RangeError("two_time_correlator: empty grid");
  if (tau_grid.front() != 0.0) throw RangeError("two_time_correlator: tau grid must start at 0");
  uniform_step(tau_grid, "two_time_correlator tau grid");
  uniform_step(start_times, "two_time_correlator start times");
  if (op_left.dims() != model.dims() || op_right.dims() != model.dims()) {
    throw DimensionError("two_time_correlator: operator dims differ from model dims");
  }
  if (trajectory.times.empty()) throw RangeError("two_time_correlator: empty trajectory");
  const double t_end = trajectory.times.back();
  const double tol = 1e-9 * std::max(1e-9, t_end - trajectory.times.front());

  const double h = max_step > 0.0 ? max_step : model.max_step();
  CorrelatorGrid grid;
  grid.t_nodes = start_times;
  grid.tau_nodes = tau_grid;
  grid.values.resize(static_cast<Eigen::Index>(start_times.size()), static_cast<Eigen::Index>(tau_grid.size()));

  // Trace against op_left as an elementwise sum: Tr(A X) = sum_ij A_ji X_ij.
  const Matrix left_t = op_left.matrix().transpose();
  Integrator integ(model);
  for (std::size_t i = 0; i < start_times.size(); ++i) {
    const double t0 = start_times[i];
    const auto it = std::lower_bound(trajectory.times.begin(), trajectory.times.end(), t0 - tol);
    if (it == trajectory.times.end() || std::abs(*it - t0) > tol) {
      throw RangeError("two_time_correlator: start time " + std::to_string(t0) + " is not a trajectory time");
    }
    if (t0 + tau_grid.back() > t_end + tol) {
      throw RangeError("two_time_correlator: t + tau beyond trajectory end at t = " + std::to_string(t0));
    }
    const auto& rho = trajectory.states[static_cast<std::size_t>(it - trajectory.times.begin())];
    Matrix x = op_right.matrix() * rho.matrix();
    for (std::size_t j = 0; j < tau_grid.size(); ++j) {
      if (j > 0) integ.advance(x, t0 + tau_grid[j - 1], t0 + tau_grid[j], h);
      grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = left_t.cwiseProduct(x).sum();
    }
  }
  return grid;
}

}  // namespace spdc::engine
