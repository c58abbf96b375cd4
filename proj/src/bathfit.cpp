#include "spdc/bathfit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include <json.hpp>

#include "spdc/io.hpp"

namespace spdc::bathfit {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kGolden = 0.61803398874989484820;
const fock::ModeDims kMomentDims{2, 2};
using fock::Complex;

engine::BathSchedule schedule_from(const std::vector<double>& tb, const Eigen::VectorXd& nb,
                                   const std::vector<double>& tc, const Eigen::VectorXd& nc, double n_w) {
  std::vector<engine::BathKnot> kb, kc;
  for (std::size_t i = 0; i < tb.size(); ++i) kb.push_back({tb[i], nb(static_cast<Eigen::Index>(i))});
  for (std::size_t i = 0; i < tc.size(); ++i) kc.push_back({tc[i], nc(static_cast<Eigen::Index>(i))});
  return engine::BathSchedule(std::move(kb), std::move(kc), n_w);
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string to_string(model::Coupling c) { return c == model::Coupling::resonant ? "resonant" : "detuned"; }

model::Coupling coupling_from_string(const std::string& s) {
  if (s == "resonant") return model::Coupling::resonant;
  if (s == "detuned") return model::Coupling::detuned;
  throw DataError("unknown coupling condition '" + s + "' (expected resonant or detuned)");
}

EmissionModel::EmissionModel(const model::SystemParams& params, const model::PulseProfile& pulse,
                             const temporal::TemporalEnvelope& env, model::Coupling condition,
                             std::vector<double> delays, std::size_t grid_t, std::size_t grid_tau)
    : params_(model::with_coupling(params, condition)),
      pulse_(pulse),
      condition_(condition),
      delays_(std::move(delays)) {
  if (delays_.empty()) throw RangeError("EmissionModel: no delays");
  if (grid_t < 2 || grid_tau < 2) throw RangeError("EmissionModel: grids need two nodes");
  const auto filter = temporal::as_filter(env);
  std::vector<double> out(delays_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pulse_.t_center + delays_[i];
  const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
  const double t_lo = *lo + filter.lo, t_hi = *hi + filter.hi;
  t_nodes_ = engine::uniform_grid(t_lo, (t_hi - t_lo) / static_cast<double>(grid_t - 1), grid_t);
  t_nodes_.back() = t_hi;
  auto tau = engine::uniform_grid(0.0, (filter.hi - filter.lo) / static_cast<double>(grid_tau - 1), grid_tau);
  tau.back() = filter.hi - filter.lo;
  // The drift matrix carries no bath dependence, so one step size serves every schedule.
  const engine::Model bare(params_, pulse_, engine::BathSchedule::constant(0.0, 0.0, 0.0), kMomentDims);
  step_ = bare.max_step();
  rows_ = engine::regression_rows(bare, t_nodes_, tau, step_);
  kernel_ = std::make_unique<temporal::EmissionKernel>(rows_, filter, out, params_.kappa_e_c);
}

std::vector<double> EmissionModel::trace(const engine::BathSchedule& baths) const {
  const engine::Model m(params_, pulse_, baths, kMomentDims);
  const auto n0 = engine::stationary_moments(m, t_nodes_.front());
  const auto mt = engine::evolve_moments(n0, m, t_nodes_, step_);
  return kernel_->trace(mt.moments);
}

EmissionModel::Affine EmissionModel::affine(const std::vector<double>& knot_times_b,
                                            const std::vector<double>& knot_times_c, double n_th_w) const {
  const auto kb = static_cast<Eigen::Index>(knot_times_b.size());
  const auto kc = static_cast<Eigen::Index>(knot_times_c.size());
  Affine a;
  a.offset = to_vector(trace(schedule_from(knot_times_b, Eigen::VectorXd::Zero(kb), knot_times_c,
                                           Eigen::VectorXd::Zero(kc), n_th_w)));
  a.design.resize(static_cast<Eigen::Index>(delays_.size()), kb + kc);
  for (Eigen::Index j = 0; j < kb + kc; ++j) {
    Eigen::VectorXd nb = Eigen::VectorXd::Zero(kb), nc = Eigen::VectorXd::Zero(kc);
    if (j < kb) {
      nb(j) = 1.0;
    } else {
      nc(j - kb) = 1.0;
    }
    a.design.col(j) = to_vector(trace(schedule_from(knot_times_b, nb, knot_times_c, nc, n_th_w))) - a.offset;
  }
  return a;
}

EmissionTrace forward_emission(const engine::BathSchedule& baths, const model::SystemParams& params,
                               const model::PulseProfile& pulse, const temporal::TemporalEnvelope& env,
                               model::Coupling condition, const std::vector<double>& delays) {
  const EmissionModel em(params, pulse, env, condition, delays);
  return {delays, em.trace(baths), condition, pulse};
}

std::vector<double> default_knot_times(const model::PulseProfile& pulse, double horizon, std::size_t count,
                                       double first_offset) {
  if (count < 2) throw ParameterError("default_knot_times: at least two knots are required");
  const double onset = pulse.t_center - pulse.t_p_fwhm;
  if (!(first_offset > 0.0) || !(horizon > onset + first_offset)) {
    throw ParameterError("default_knot_times: horizon must lie beyond onset + first_offset");
  }
  std::vector<double> t{onset};
  const double a = std::log(first_offset), b = std::log(horizon - onset);
  const std::size_t m = count - 1;
  for (std::size_t k = 0; k < m; ++k) {
    const double frac = m > 1 ? static_cast<double>(k) / static_cast<double>(m - 1) : 0.0;
    t.push_back(onset + std::exp(a + frac * (b - a)));
  }
  return t;
}

std::size_t coordinate_descent(const std::function<double(const Eigen::VectorXd&)>& objective, Eigen::VectorXd& x,
                               double scale, std::size_t max_sweeps, double tolerance, double line_tolerance) {
  if (!(scale > 0.0)) throw ParameterError("coordinate_descent: scale must be positive");
  x = x.cwiseMax(0.0);
  double fx = objective(x);
  const double tol_x = line_tolerance * scale;

  // Golden-section minimum of phi on [a, b]; returns the abscissa.
  const auto golden = [&](const std::function<double(double)>& phi, double a, double b) {
    double c = b - kGolden * (b - a), d = a + kGolden * (b - a);
    double fc = phi(c), fd = phi(d);
    while (b - a > tol_x) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - kGolden * (b - a);
        fc = phi(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + kGolden * (b - a);
        fd = phi(d);
      }
    }
    return 0.5 * (a + b);
  };

  // Minimize phi(s) over s >= s_min along a direction, starting from s = 0.
  const auto line_min = [&](const std::function<double(double)>& phi, double s_min, double step) {
    const double f0 = phi(0.0);
    double hi = step;
    double f_hi = phi(hi);
    while (f_hi < f0 && hi < 1e12 * step) {
      hi *= 2.0;
      f_hi = phi(hi);
    }
    double lo = std::max(s_min, -step);
    double f_lo = phi(lo);
    while (lo > s_min && f_lo < f0) {
      lo = std::max(s_min, 2.0 * lo);
      f_lo = phi(lo);
    }
    double s = golden(phi, lo, hi);
    if (phi(s) > f0) s = 0.0;
    if (lo == s_min && f_lo <= phi(s)) s = s_min;
    return s;
  };

  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    const double f_start = fx;
    const Eigen::VectorXd x_start = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::VectorXd y = x;
      const auto phi = [&](double s) {
        y(i) = x(i) + s;
        return objective(y);
      };
      const double step = std::max(0.5 * std::abs(x(i)), scale);
      const double s = line_min(phi, -x(i), step);
      x(i) = std::max(0.0, x(i) + s);
      fx = objective(x);
    }
    // Pattern move along the net displacement of this sweep.
    const Eigen::VectorXd dir = x - x_start;
    if (dir.norm() > 0.0) {
      double s_max_neg = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (dir(i) > 0.0) s_max_neg = std::max(s_max_neg, -x(i) / dir(i));
      }
      double s_cap = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (dir(i) < 0.0) s_cap = std::min(s_cap, -x(i) / dir(i));
      }
      const Eigen::VectorXd base = x;
      const auto phi = [&](double s) {
        if (s > s_cap) s = s_cap;
        const Eigen::VectorXd y = (base + s * dir).cwiseMax(0.0);
        return objective(y);
      };
      const double s = line_min(phi, std::max(-1.0, s_max_neg), std::min(1.0, 0.5 * s_cap));
      const Eigen::VectorXd cand = (base + std::min(s, s_cap) * dir).cwiseMax(0.0);
      const double fc = objective(cand);
      if (fc < fx) {
        x = cand;
        fx = fc;
      }
    }
    if (fx <= 1e-300 || f_start - fx <= tolerance * std::max(f_start, 1e-300)) return sweep;
  }
  throw ConvergenceError("coordinate_descent: no convergence after " + std::to_string(max_sweeps) + " sweeps");
}

FitReport fit_baths(const EmissionTrace& trace_detuned, const EmissionTrace& trace_resonant,
                    const std::vector<double>& knot_times, const model::SystemParams& params,
                    const model::PulseProfile& pulse, const temporal::TemporalEnvelope& env,
                    const FitOptions& options) {
  if (knot_times.size() < 2) throw ParameterError("fit_baths: at least two knots are required");
  if (trace_detuned.condition != model::Coupling::detuned || trace_resonant.condition != model::Coupling::resonant) {
    throw DataError("fit_baths: expected one detuned and one resonant trace");
  }
  if (trace_detuned.delays != trace_resonant.delays) throw DataError("fit_baths: traces must share a time base");
  for (const auto* tr : {&trace_detuned, &trace_resonant}) {
    if (tr->delays.size() != tr->quanta.size() || tr->delays.empty()) {
      throw DataError("fit_baths: trace delays and quanta differ in length");
    }
    for (double q : tr->quanta) {
      if (!std::isfinite(q)) throw DataError("fit_baths: non-finite trace value");
    }
  }
  const auto k = static_cast<Eigen::Index>(knot_times.size());
  const EmissionModel det(params, pulse, env, model::Coupling::detuned, trace_detuned.delays, options.grid_t,
                          options.grid_tau);
  const EmissionModel res(params, pulse, env, model::Coupling::resonant, trace_resonant.delays, options.grid_t,
                          options.grid_tau);
  const auto ad = det.affine(knot_times, knot_times, options.n_th_w);
  const auto ar = res.affine(knot_times, knot_times, options.n_th_w);
  const Eigen::VectorXd yd = to_vector(trace_detuned.quanta);
  const Eigen::VectorXd yr = to_vector(trace_resonant.quanta);
  const double n_total = static_cast<double>(yd.size() + yr.size());
  const double scale = std::max({1e-3, yd.cwiseAbs().maxCoeff(), yr.cwiseAbs().maxCoeff()});

  Eigen::VectorXd nb = Eigen::VectorXd::Zero(k), nc = Eigen::VectorXd::Zero(k);
  const auto residual_d = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    return (ad.offset + ad.design.leftCols(k) * b + ad.design.rightCols(k) * c - yd).squaredNorm();
  };
  const auto residual_r = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    return (ar.offset + ar.design.leftCols(k) * b + ar.design.rightCols(k) * c - yr).squaredNorm();
  };

  FitReport report;
  const auto finish = [&](bool converged) {
    report.baths = schedule_from(knot_times, nb, knot_times, nc, options.n_th_w);
    report.residual = std::sqrt((residual_d(nb, nc) + residual_r(nb, nc)) / n_total);
    report.converged = converged;
    report.active_b.assign(static_cast<std::size_t>(k), false);
    report.active_c.assign(static_cast<std::size_t>(k), false);
    for (Eigen::Index i = 0; i < k; ++i) {
      report.active_b[static_cast<std::size_t>(i)] = nb(i) == 0.0;
      report.active_c[static_cast<std::size_t>(i)] = nc(i) == 0.0;
    }
  };
  const auto run = [&](const char* stage, const std::function<double(const Eigen::VectorXd&)>& f,
                       Eigen::VectorXd& x, const std::function<void(const Eigen::VectorXd&)>& commit,
                       const std::function<double()>& stage_rms) {
    std::size_t sweeps = 0;
    try {
      sweeps = coordinate_descent(f, x, scale, options.max_sweeps, options.tolerance, options.line_tolerance);
    } catch (const ConvergenceError&) {
      commit(x);
      report.iterations += options.max_sweeps;
      report.stages.push_back({stage, stage_rms(), options.max_sweeps});
      finish(false);
      throw FitConvergenceError(std::string("fit_baths: ") + stage + " stage did not converge", report);
    }
    commit(x);
    report.iterations += sweeps;
    report.stages.push_back({stage, stage_rms(), sweeps});
  };

  // Stage 1: microwave bath from the detuned trace; acoustic knots held at zero.
  run(
      "detuned", [&](const Eigen::VectorXd& c) { return residual_d(nb, c); }, nc,
      [&](const Eigen::VectorXd& c) { nc = c; },
      [&] { return std::sqrt(residual_d(nb, nc) / static_cast<double>(yd.size())); });
  // Stage 2: acoustic bath from the resonant trace with the microwave bath fixed.
  run(
      "resonant", [&](const Eigen::VectorXd& b) { return residual_r(b, nc); }, nb,
      [&](const Eigen::VectorXd& b) { nb = b; },
      [&] { return std::sqrt(residual_r(nb, nc) / static_cast<double>(yr.size())); });
  // Joint refinement over both traces.
  Eigen::VectorXd all(2 * k);
  all << nb, nc;
  run(
      "joint",
      [&](const Eigen::VectorXd& v) { return residual_d(v.head(k), v.tail(k)) + residual_r(v.head(k), v.tail(k)); },
      all,
      [&](const Eigen::VectorXd& v) {
        nb = v.head(k);
        nc = v.tail(k);
      },
      [&] { return std::sqrt((residual_d(nb, nc) + residual_r(nb, nc)) / n_total); });
  finish(true);
  return report;
}

PowerLawFit fit_power_law(const std::vector<double>& powers, const std::vector<double>& occupations) {
  if (powers.size() != occupations.size()) throw DataError("fit_power_law: size mismatch");
  if (powers.size() < 3) throw DataError("fit_power_law: at least three points are required");
  const auto n = static_cast<double>(powers.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    if (!(powers[i] > 0.0) || !(occupations[i] > 0.0) || !std::isfinite(powers[i]) ||
        !std::isfinite(occupations[i])) {
      throw DataError("fit_power_law: inputs must be positive and finite");
    }
    lx.push_back(std::log(powers[i]));
    ly.push_back(std::log(occupations[i]));
    sx += lx.back();
    sy += ly.back();
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw DataError("fit_power_law: powers must not all be equal");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  const double intercept = my - fit.exponent * mx;
  fit.prefactor = std::exp(intercept);
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - intercept - fit.exponent * lx[i];
    rss += r * r;
  }
  fit.stderr_exponent = std::sqrt(rss / (n - 2.0) / sxx);
  return fit;
}

namespace {

// offset + amplitude * exp(-t / tau) in scaled units.
struct DecayFunctor : Eigen::DenseFunctor<double> {
  const Eigen::VectorXd& t;
  const Eigen::VectorXd& y;
  DecayFunctor(const Eigen::VectorXd& t_, const Eigen::VectorXd& y_)
      : Eigen::DenseFunctor<double>(3, static_cast<int>(t_.size())), t(t_), y(y_) {}
  int operator()(const InputType& p, ValueType& r) const {
    r = (p(0) + p(1) * (-t.array() / p(2)).exp()).matrix() - y;
    return 0;
  }
  int df(const InputType& p, JacobianType& j) const {
    const Eigen::ArrayXd e = (-t.array() / p(2)).exp();
    j.col(0).setOnes();
    j.col(1) = e.matrix();
    j.col(2) = (p(1) * e * t.array() / (p(2) * p(2))).matrix();
    return 0;
  }
};

}  // namespace

SlowDecayFit fit_slow_decay(const std::vector<double>& rep_periods, const std::vector<double>& pre_pulse_quanta) {
  if (rep_periods.size() != pre_pulse_quanta.size()) throw DataError("fit_slow_decay: size mismatch");
  if (rep_periods.size() < 3) throw DataError("fit_slow_decay: at least three points are required");
  for (std::size_t i = 0; i < rep_periods.size(); ++i) {
    if (!(rep_periods[i] > 0.0) || !std::isfinite(rep_periods[i]) || !std::isfinite(pre_pulse_quanta[i])) {
      throw DataError("fit_slow_decay: periods must be positive and values finite");
    }
  }
  std::vector<double> sorted = rep_periods;
  std::sort(sorted.begin(), sorted.end());
  if (std::unique(sorted.begin(), sorted.end()) - sorted.begin() < 3) {
    throw DataError("fit_slow_decay: at least three distinct periods are required");
  }
  const double t_scale = sorted.back();
  const Eigen::VectorXd ts = to_vector(rep_periods) / t_scale;
  const Eigen::VectorXd yv = to_vector(pre_pulse_quanta);
  const double y_scale = std::max(yv.cwiseAbs().maxCoeff(), 1e-300);
  const Eigen::VectorXd ys = yv / y_scale;

  SlowDecayFit fit;
  if (ys.maxCoeff() - ys.minCoeff() <= 1e-12) {
    fit.amplitude = 0.0;
    fit.offset = yv.mean();
    fit.tau_decay = std::numeric_limits<double>::quiet_NaN();
    fit.stderr_tau = std::numeric_limits<double>::quiet_NaN();
    fit.identifiable = false;
    return fit;
  }

  // Profile over tau: for fixed tau the model is linear in (offset, amplitude).
  double best_rss = std::numeric_limits<double>::infinity();
  Eigen::VectorXd p(3);
  const double tmin = sorted.front() / t_scale;
  for (int k = 0; k <= 200; ++k) {
    const double tau = 0.1 * tmin * std::pow(100.0 / (0.1 * tmin), k / 200.0);
    Eigen::MatrixXd a(ts.size(), 2);
    a.col(0).setOnes();
    a.col(1) = (-ts.array() / tau).exp().matrix();
    const Eigen::Vector2d c = a.colPivHouseholderQr().solve(ys);
    const double rss = (a * c - ys).squaredNorm();
    if (rss < best_rss) {
      best_rss = rss;
      p << c(0), c(1), tau;
    }
  }
  DecayFunctor functor(ts, ys);
  Eigen::LevenbergMarquardt<DecayFunctor> lm(functor);
  lm.setXtol(1e-15);
  lm.setFtol(1e-15);
  lm.setGtol(0.0);
  lm.setMaxfev(2000);
  lm.minimize(p);

  Eigen::VectorXd r(ts.size());
  functor(p, r);
  Eigen::MatrixXd j(ts.size(), 3);
  functor.df(p, j);
  const auto n = static_cast<double>(ts.size());
  const double dof = n - 3.0;
  fit.offset = p(0) * y_scale;
  fit.amplitude = p(1) * y_scale;
  fit.tau_decay = p(2) * t_scale;
  if (dof > 0.0) {
    const Eigen::Matrix3d cov = (j.transpose() * j).inverse() * (r.squaredNorm() / dof);
    fit.stderr_tau = std::sqrt(std::max(0.0, cov(2, 2))) * t_scale;
  } else {
    fit.stderr_tau = std::numeric_limits<double>::quiet_NaN();
  }
  fit.identifiable = std::isfinite(fit.tau_decay) && fit.tau_decay > 0.0 && p(1) != 0.0;
  return fit;
}

double double_lorentzian(double f, const SpectrumFit& fit) {
  double v = fit.floor;
  for (const auto& pk : fit.peaks) {
    const double hw = 0.5 * pk.width;
    const double d = f - pk.centre;
    v += pk.amplitude * hw * hw / (d * d + hw * hw);
  }
  return v;
}

namespace {

struct SpectrumFunctor : Eigen::DenseFunctor<double> {
  const Eigen::VectorXd& f;
  const Eigen::VectorXd& y;
  SpectrumFunctor(const Eigen::VectorXd& f_, const Eigen::VectorXd& y_)
      : Eigen::DenseFunctor<double>(7, static_cast<int>(f_.size())), f(f_), y(y_) {}
  // p = floor, (amplitude, centre, width) x 2 in scaled units.
  int operator()(const InputType& p, ValueType& r) const {
    for (Eigen::Index i = 0; i < f.size(); ++i) {
      double v = p(0);
      for (int k = 0; k < 2; ++k) {
        const double hw = 0.5 * p(3 + 3 * k);
        const double d = f(i) - p(2 + 3 * k);
        v += p(1 + 3 * k) * hw * hw / (d * d + hw * hw);
      }
      r(i) = v - y(i);
    }
    return 0;
  }
};

}  // namespace

SpectrumFit fit_double_lorentzian(const std::vector<double>& freqs_hz, const std::vector<double>& psd,
                                  const SpectrumFit& guess) {
  if (freqs_hz.size() != psd.size()) throw DataError("fit_double_lorentzian: size mismatch");
  if (freqs_hz.size() < 8) throw DataError("fit_double_lorentzian: at least eight points are required");
  const Eigen::VectorXd fv = to_vector(freqs_hz);
  const double f_scale = std::max(fv.cwiseAbs().maxCoeff(), 1.0);
  const Eigen::VectorXd yv = to_vector(psd);
  if (!yv.allFinite() || !fv.allFinite()) throw DataError("fit_double_lorentzian: non-finite input");
  const double y_scale = std::max(yv.cwiseAbs().maxCoeff(), 1e-300);
  const Eigen::VectorXd fs = fv / f_scale;
  const Eigen::VectorXd ys = yv / y_scale;
  Eigen::VectorXd p(7);
  p(0) = guess.floor / y_scale;
  for (int k = 0; k < 2; ++k) {
    p(1 + 3 * k) = guess.peaks[k].amplitude / y_scale;
    p(2 + 3 * k) = guess.peaks[k].centre / f_scale;
    p(3 + 3 * k) = std::max(std::abs(guess.peaks[k].width), 1e-9 * f_scale) / f_scale;
  }
  SpectrumFunctor functor(fs, ys);
  Eigen::NumericalDiff<SpectrumFunctor> nd(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<SpectrumFunctor>> lm(nd);
  lm.setXtol(1e-14);
  lm.setFtol(1e-14);
  lm.setMaxfev(20000);
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
    throw DataError("fit_double_lorentzian: improper input");
  }
  SpectrumFit out;
  out.floor = p(0) * y_scale;
  for (int k = 0; k < 2; ++k) {
    out.peaks[k] = {p(1 + 3 * k) * y_scale, p(2 + 3 * k) * f_scale, std::abs(p(3 + 3 * k)) * f_scale};
  }
  if (out.peaks[0].centre > out.peaks[1].centre) std::swap(out.peaks[0], out.peaks[1]);
  Eigen::VectorXd r(fs.size());
  functor(p, r);
  out.rms = std::sqrt(r.squaredNorm() / static_cast<double>(r.size())) * y_scale;
  return out;
}

SpectrumFit fit_double_lorentzian(const std::vector<double>& freqs_hz, const std::vector<double>& psd) {
  if (freqs_hz.size() != psd.size() || freqs_hz.size() < 8) {
    throw DataError("fit_double_lorentzian: need at least eight matching points");
  }
  for (std::size_t i = 1; i < freqs_hz.size(); ++i) {
    if (!(freqs_hz[i] > freqs_hz[i - 1])) throw DataError("fit_double_lorentzian: frequencies must increase");
  }
  const std::size_t n = psd.size();
  SpectrumFit g;
  std::vector<double> sorted = psd;
  std::sort(sorted.begin(), sorted.end());
  g.floor = sorted[n / 10];
  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (psd[i] >= psd[i - 1] && psd[i] > psd[i + 1]) maxima.push_back(i);
  }
  std::sort(maxima.begin(), maxima.end(), [&](std::size_t a, std::size_t b) { return psd[a] > psd[b]; });
  const double span = freqs_hz.back() - freqs_hz.front();
  std::size_t picks[2] = {n / 3, 2 * n / 3};
  if (maxima.size() >= 2) {
    picks[0] = maxima[0];
    picks[1] = maxima[1];
  } else if (maxima.size() == 1) {
    picks[0] = maxima[0];
    picks[1] = maxima[0] < n / 2 ? maxima[0] + n / 10 : maxima[0] - n / 10;
  }
  for (int k = 0; k < 2; ++k) {
    const std::size_t i = picks[k];
    const double height = psd[i] - g.floor;
    // Half-height walk for a width estimate.
    std::size_t r = i;
    while (r + 1 < n && psd[r] - g.floor > 0.5 * height) ++r;
    std::size_t l = i;
    while (l > 0 && psd[l] - g.floor > 0.5 * height) --l;
    double width = freqs_hz[r] - freqs_hz[l];
    if (!(width > 0.0)) width = span / 20.0;
    g.peaks[k] = {std::max(height, 0.0), freqs_hz[i], width};
  }
  return fit_double_lorentzian(freqs_hz, psd, g);
}

std::vector<double> output_spectrum(const model::SystemParams& params, const model::PulseProfile& pulse,
                                     const engine::BathSchedule& baths, double t,
                                     const std::vector<double>& freqs_hz) {
  const engine::Model m(params, pulse, baths, kMomentDims);
  const auto& r = m.rates();
  const Eigen::Matrix2cd a = engine::drift_matrix(m, t);
  const double gain = m.gamma_om(t);
  // Input ports: acoustic bath, microwave intrinsic bath, waveguide, and the
  // optomechanical gain port (creation-operator input, vacuum weight 1).
  Eigen::Matrix<Complex, 2, 4> l = Eigen::Matrix<Complex, 2, 4>::Zero();
  l(0, 0) = -std::sqrt(r.kappa_i_b);
  l(1, 1) = -std::sqrt(r.kappa_i_c);
  l(1, 2) = -std::sqrt(r.kappa_e_c);
  l(0, 3) = std::sqrt(gain);
  const double weights[4] = {baths.n_b(t), baths.n_c(t), baths.n_w(), 1.0};
  std::vector<double> out;
  out.reserve(freqs_hz.size());
  for (double f : freqs_hz) {
    const Complex iw(0.0, kTwoPi * f);
    const Eigen::Matrix2cd g = (-iw * Eigen::Matrix2cd::Identity() - a).inverse();
    const Eigen::Matrix<Complex, 1, 4> resp = std::sqrt(r.kappa_e_c) * (g * l).row(1);
    double s = 0.0;
    for (int k = 0; k < 4; ++k) {
      const Complex tk = resp(k) + (k == 2 ? 1.0 : 0.0);
      s += std::norm(tk) * weights[k];
    }
    out.push_back(s);
  }
  return out;
}

std::vector<SpectrumFit> spectral_decomposition(const std::vector<double>& freqs_hz,
                                                const std::vector<std::vector<double>>& spectrogram) {
  std::vector<SpectrumFit> fits;
  fits.reserve(spectrogram.size());
  for (std::size_t i = 0; i < spectrogram.size(); ++i) {
    // Warm start from the previous delay keeps peak labels stable.
    fits.push_back(i == 0 ? fit_double_lorentzian(freqs_hz, spectrogram[i])
                          : fit_double_lorentzian(freqs_hz, spectrogram[i], fits.back()));
  }
  return fits;
}

std::vector<EmissionTrace> read_traces_csv(const std::string& path, const model::PulseProfile& pump) {
  const auto table = io::read_csv(path);
  const auto cd = table.column("delay_s"), cq = table.column("quanta"), cc = table.column("condition");
  std::map<model::Coupling, EmissionTrace> by_condition;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path + ":" + std::to_string(table.line_numbers[r]);
    model::Coupling c;
    try {
      c = coupling_from_string(row[cc]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    auto& tr = by_condition[c];
    tr.condition = c;
    tr.pump = pump;
    tr.delays.push_back(io::parse_number(row[cd], where));
    const double q = io::parse_number(row[cq], where);
    if (!(q >= 0.0)) throw DataError(where + ": quanta must be >= 0");
    tr.quanta.push_back(q);
  }
  std::vector<EmissionTrace> out;
  for (auto& [c, tr] : by_condition) out.push_back(std::move(tr));
  return out;
}

void write_traces_csv(const std::string& path, const std::vector<EmissionTrace>& traces) {
  io::CsvWriter w(path, {"delay_s", "quanta", "condition"});
  for (const auto& tr : traces) {
    if (tr.delays.size() != tr.quanta.size()) throw DimensionError("write_traces_csv: size mismatch");
    for (std::size_t i = 0; i < tr.delays.size(); ++i) {
      w.row({io::format_number(tr.delays[i]), io::format_number(tr.quanta[i]), to_string(tr.condition)});
    }
  }
  w.close();
}

void write_schedule_csv(const std::string& path, const engine::BathSchedule& baths) {
  io::CsvWriter w(path, {"bath", "t_s", "occupation"});
  for (const auto& k : baths.knots_b()) w.row({"b", io::format_number(k.t), io::format_number(k.n)});
  for (const auto& k : baths.knots_c()) w.row({"c", io::format_number(k.t), io::format_number(k.n)});
  w.row({"w", "0", io::format_number(baths.n_w())});
  w.close();
}

engine::BathSchedule read_schedule_csv(const std::string& path) {
  const auto table = io::read_csv(path);
  const auto cb = table.column("bath"), ct = table.column("t_s"), cn = table.column("occupation");
  std::vector<engine::BathKnot> kb, kc;
  double nw = 0.0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = path + ":" + std::to_string(table.line_numbers[r]);
    const engine::BathKnot k{io::parse_number(row[ct], where), io::parse_number(row[cn], where)};
    if (row[cb] == "b") {
      kb.push_back(k);
    } else if (row[cb] == "c") {
      kc.push_back(k);
    } else if (row[cb] == "w") {
      nw = k.n;
    } else {
      throw DataError(where + ": bath must be b, c or w");
    }
  }
  try {
    return engine::BathSchedule(std::move(kb), std::move(kc), nw);
  } catch (const ParameterError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string fit_report_json(const FitReport& report) {
  nlohmann::json j;
  const auto knots = [](const std::vector<engine::BathKnot>& ks) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& k : ks) a.push_back({{"t_s", k.t}, {"occupation", k.n}});
    return a;
  };
  j["baths"] = {{"knots_b", knots(report.baths.knots_b())},
                {"knots_c", knots(report.baths.knots_c())},
                {"n_th_w", report.baths.n_w()}};
  j["residual"] = report.residual;
  j["iterations"] = report.iterations;
  j["converged"] = report.converged;
  j["active_b"] = report.active_b;
  j["active_c"] = report.active_c;
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : report.stages) stages.push_back({{"stage", s.stage}, {"rms", s.rms}, {"sweeps", s.sweeps}});
  j["stages"] = stages;
  return j.dump(2);
}

void write_fit_report(const std::string& path, const FitReport& report) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");
  out << fit_report_json(report) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace spdc::bathfit
