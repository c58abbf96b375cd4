#pragma once

// Second-moment (covariance) dynamics of the reduced generator. The
// generator is quadratic in (b, c), so the normally ordered moments
// N_ij = <x_i^dag x_j>, x = (b, c), obey a closed linear equation and the
// regression correlators of c follow from a 2x2 propagator. Results agree
// with the Fock-space route up to truncation error.

#include <vector>

#include <Eigen/Dense>

#include "spdc/engine.hpp"

namespace spdc::engine {

using Moments = Eigen::Matrix2cd;

/// d<x>/dt = M(t) <x>.
Eigen::Matrix2cd drift_matrix(const Model& model, double t);
/// Diagonal phase-insensitive diffusion (rates that add quanta), rad/s.
Eigen::Vector2d diffusion(const Model& model, double t);

/// Normally ordered moments of a two-mode state.
Moments moments_of(const fock::DensityMatrix& rho);

/// Fixed point of dN/dt = M^* N + N M^T + D with coefficients frozen at t.
Moments stationary_moments(const Model& model, double t);

/// Closed-form resonant fixed point for constant baths and no pump.
struct RateSolution {
  double n_b = 0.0;
  double n_c = 0.0;
};
RateSolution resonant_rate_solution(const Model& model, double t);

struct MomentTrajectory {
  std::vector<double> times;
  std::vector<Moments> moments;
};

MomentTrajectory evolve_moments(const Moments& n0, const Model& model, const std::vector<double>& t_grid,
                                double max_step = 0.0);

/// Propagator rows for <c^dag(t_i + tau_j) c(t_i)> = r_b(i, j) <b^dag c>(t_i) + r_c(i, j) <c^dag c>(t_i).
/// They depend on the rates and the pump only, never on bath occupations.
struct RegressionRows {
  std::vector<double> t_nodes;
  std::vector<double> tau_nodes;
  fock::Matrix r_b;
  fock::Matrix r_c;
};

RegressionRows regression_rows(const Model& model, const std::vector<double>& start_times,
                               const std::vector<double>& tau_grid, double max_step = 0.0);

/// <c^dag(t + tau) c(t)> on a product grid. `moments` must be sampled at
/// rows.t_nodes.
CorrelatorGrid moment_correlator(const RegressionRows& rows, const std::vector<Moments>& moments);

/// Zero-mean Gaussian two-mode state with the given normally ordered
/// moments, built in the truncated Fock space of `dims`.
fock::DensityMatrix gaussian_state(const fock::ModeDims& dims, const Moments& n);

}  // namespace spdc::engine
