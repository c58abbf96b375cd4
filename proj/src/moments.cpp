#include "spdc/moments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spdc/errors.hpp"

namespace spdc::engine {

namespace {

constexpr Complex kI(0.0, 1.0);
constexpr double kMaxInverseTemperature = 50.0;

long step_count(double span, double max_step) {
  return std::max(1L, static_cast<long>(std::ceil(span / max_step * (1.0 - 1e-12))));
}

}  // namespace

Eigen::Matrix2cd drift_matrix(const Model& model, double t) {
  const auto& r = model.rates();
  const double gain = model.gamma_om(t);
  Eigen::Matrix2cd m;
  m(0, 0) = -kI * r.detuning - 0.5 * (r.kappa_i_b - gain);
  m(0, 1) = kI * r.g_pe;
  m(1, 0) = kI * r.g_pe;
  m(1, 1) = -0.5 * r.kappa_c();
  return m;
}

Eigen::Vector2d diffusion(const Model& model, double t) {
  const auto d = model.dissipation(t);
  return {d.up_b, d.up_c};
}

Moments moments_of(const fock::DensityMatrix& rho) {
  const auto& dims = rho.dims();
  if (dims.modes() != 2) throw DimensionError("moments_of: expected a two-mode state");
  const auto b = fock::embed(fock::annihilation(dims[0]), 0, dims);
  const auto c = fock::embed(fock::annihilation(dims[1]), 1, dims);
  const fock::Operator* x[2] = {&b, &c};
  Moments n;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) n(i, j) = fock::expectation(x[i]->adjoint() * *x[j], rho);
  }
  return n;
}

Moments stationary_moments(const Model& model, double t) {
  const Eigen::Matrix2cd m = drift_matrix(model, t);
  const Eigen::Vector2d d = diffusion(model, t);
  // vec(M^* N + N M^T) = (I kron M^* + M kron I) vec(N), column-major vec.
  const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
  Eigen::Matrix4cd a;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      a.block<2, 2>(2 * r, 2 * c) = id(r, c) * m.conjugate() + m(r, c) * id;
    }
  }
  Eigen::Vector4cd rhs(-d(0), 0.0, 0.0, -d(1));
  Eigen::FullPivLU<Eigen::Matrix4cd> lu(a);
  if (!lu.isInvertible()) throw DegenerateError("stationary_moments: no unique fixed point (undamped mode)");
  const Eigen::Vector4cd v = lu.solve(rhs);
  Moments n;
  n << v(0), v(2), v(1), v(3);
  return n;
}

RateSolution resonant_rate_solution(const Model& model, double t) {
  const auto& r = model.rates();
  const Eigen::Vector2d d = diffusion(model, t);
  const double kb = r.kappa_i_b - model.gamma_om(t);
  const double kc = r.kappa_c();
  if (!(kb > 0.0) || !(kc > 0.0)) throw DegenerateError("resonant_rate_solution: undamped mode");
  // Adiabatic cross moment m = 2 i g (n_b - n_c) / (kb + kc) gives an
  // exchange rate J = 4 g^2 / (kb + kc) between the two populations.
  const double j = 4.0 * r.g_pe * r.g_pe / (kb + kc);
  Eigen::Matrix2d a;
  a << kb + j, -j, -j, kc + j;
  const Eigen::Vector2d n = a.lu().solve(d);
  return {n(0), n(1)};
}

MomentTrajectory evolve_moments(const Moments& n0, const Model& model, const std::vector<double>& t_grid,
                                double max_step) {
  if (t_grid.empty()) throw RangeError("evolve_moments: empty time grid");
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) throw RangeError("evolve_moments: time grid must be strictly increasing");
  }
  const double h_max = max_step > 0.0 ? max_step : model.max_step();
  const auto rhs = [&](double t, const Moments& n) -> Moments {
    const Eigen::Matrix2cd m = drift_matrix(model, t);
    const Eigen::Vector2d d = diffusion(model, t);
    Moments out = m.conjugate() * n + n * m.transpose();
    out(0, 0) += d(0);
    out(1, 1) += d(1);
    return out;
  };
  MomentTrajectory traj;
  traj.times = t_grid;
  traj.moments.reserve(t_grid.size());
  Moments n = n0;
  traj.moments.push_back(n);
  for (std::size_t i = 1; i < t_grid.size(); ++i) {
    const double span = t_grid[i] - t_grid[i - 1];
    const long steps = step_count(span, h_max);
    const double h = span / static_cast<double>(steps);
    for (long s = 0; s < steps; ++s) {
      const double t = t_grid[i - 1] + static_cast<double>(s) * h;
      const Moments k1 = rhs(t, n);
      const Moments k2 = rhs(t + 0.5 * h, n + 0.5 * h * k1);
      const Moments k3 = rhs(t + 0.5 * h, n + 0.5 * h * k2);
      const Moments k4 = rhs(t + h, n + h * k3);
      n += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (!n.allFinite()) throw IntegratorError("evolve_moments: non-finite moments; step too coarse");
    traj.moments.push_back(n);
  }
  return traj;
}

RegressionRows regression_rows(const Model& model, const std::vector<double>& start_times,
                               const std::vector<double>& tau_grid, double max_step) {
  if (start_times.empty() || tau_grid.empty()) throw RangeError("regression_rows: empty grid");
  if (tau_grid.front() != 0.0) throw RangeError("regression_rows: tau grid must start at 0");
  for (std::size_t j = 1; j < tau_grid.size(); ++j) {
    if (!(tau_grid[j] > tau_grid[j - 1])) throw RangeError("regression_rows: tau grid must be increasing");
  }
  const double h_max = max_step > 0.0 ? max_step : model.max_step();
  RegressionRows rows;
  rows.t_nodes = start_times;
  rows.tau_nodes = tau_grid;
  const auto nt = static_cast<Eigen::Index>(start_times.size());
  const auto nu = static_cast<Eigen::Index>(tau_grid.size());
  rows.r_b.resize(nt, nu);
  rows.r_c.resize(nt, nu);
  // v(tau) = (<b^dag(t+tau) c(t)>, <c^dag(t+tau) c(t)>) obeys dv/dtau = M^*(t + tau) v;
  // only row 1 of its propagator is kept.
  for (Eigen::Index i = 0; i < nt; ++i) {
    const double t0 = start_times[static_cast<std::size_t>(i)];
    Eigen::Matrix2cd phi = Eigen::Matrix2cd::Identity();
    rows.r_b(i, 0) = phi(1, 0);
    rows.r_c(i, 0) = phi(1, 1);
    for (Eigen::Index j = 1; j < nu; ++j) {
      const double a = t0 + tau_grid[static_cast<std::size_t>(j - 1)];
      const double span = tau_grid[static_cast<std::size_t>(j)] - tau_grid[static_cast<std::size_t>(j - 1)];
      const long steps = step_count(span, h_max);
      const double h = span / static_cast<double>(steps);
      for (long s = 0; s < steps; ++s) {
        const double t = a + static_cast<double>(s) * h;
        const Eigen::Matrix2cd m0 = drift_matrix(model, t).conjugate();
        const Eigen::Matrix2cd m1 = drift_matrix(model, t + 0.5 * h).conjugate();
        const Eigen::Matrix2cd m2 = drift_matrix(model, t + h).conjugate();
        const Eigen::Matrix2cd k1 = m0 * phi;
        const Eigen::Matrix2cd k2 = m1 * (phi + 0.5 * h * k1);
        const Eigen::Matrix2cd k3 = m1 * (phi + 0.5 * h * k2);
        const Eigen::Matrix2cd k4 = m2 * (phi + h * k3);
        phi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      rows.r_b(i, j) = phi(1, 0);
      rows.r_c(i, j) = phi(1, 1);
    }
  }
  return rows;
}

CorrelatorGrid moment_correlator(const RegressionRows& rows, const std::vector<Moments>& moments) {
  if (moments.size() != rows.t_nodes.size()) {
    throw DimensionError("moment_correlator: one moment matrix per start time is required");
  }
  CorrelatorGrid grid;
  grid.t_nodes = rows.t_nodes;
  grid.tau_nodes = rows.tau_nodes;
  grid.values.resize(rows.r_b.rows(), rows.r_b.cols());
  for (Eigen::Index i = 0; i < rows.r_b.rows(); ++i) {
    const auto& n = moments[static_cast<std::size_t>(i)];
    grid.values.row(i) = rows.r_b.row(i) * n(0, 1) + rows.r_c.row(i) * n(1, 1);
  }
  return grid;
}

fock::DensityMatrix gaussian_state(const fock::ModeDims& dims, const Moments& n) {
  if (dims.modes() != 2) throw DimensionError("gaussian_state: expected two modes");
  if ((n - n.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, n.cwiseAbs().maxCoeff())) {
    throw ParameterError("gaussian_state: moment matrix must be Hermitian");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(0.5 * (n + n.adjoint()));
  const Eigen::Vector2d nu = es.eigenvalues();
  if (nu.minCoeff() < -1e-12) throw ParameterError("gaussian_state: moment matrix must be positive semidefinite");
  const Eigen::Matrix2cd u = es.eigenvectors();
  Eigen::Vector2d beta;
  for (int k = 0; k < 2; ++k) {
    beta(k) = nu(k) > 0.0 ? std::min(kMaxInverseTemperature, std::log1p(1.0 / nu(k))) : kMaxInverseTemperature;
  }
  // K = sum_k beta_k y_k^dag y_k with y_k = sum_j U_jk x_j.
  const Eigen::Matrix2cd coeff = u.conjugate() * beta.asDiagonal() * u.transpose();
  const auto b = fock::embed(fock::annihilation(dims[0]), 0, dims);
  const auto c = fock::embed(fock::annihilation(dims[1]), 1, dims);
  const fock::Matrix* x[2] = {&b.matrix(), &c.matrix()};
  fock::Matrix k = fock::Matrix::Zero(dims.total(), dims.total());
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (coeff(i, j) != Complex(0.0)) k.noalias() += coeff(i, j) * (x[i]->adjoint() * *x[j]);
    }
  }
  Eigen::SelfAdjointEigenSolver<fock::Matrix> ks(0.5 * (k + k.adjoint()));
  const Eigen::VectorXd lam = ks.eigenvalues();
  const Eigen::VectorXd w = (-(lam.array() - lam.minCoeff())).exp();
  fock::Matrix rho = ks.eigenvectors() * w.cast<Complex>().asDiagonal() * ks.eigenvectors().adjoint();
  rho /= rho.trace().real();
  return {0.5 * (rho + rho.adjoint()), dims};
}

}  // namespace spdc::engine
