#pragma once

// Time-dependent Lindblad evolution of the reduced (acoustic, microwave)
// system after adiabatic elimination of the optical mode, quantum-regression
// two-time correlators, and heralding (quantum-jump) conditioning.

#include <cstddef>
#include <vector>

#include "spdc/fock.hpp"
#include "spdc/model.hpp"

namespace spdc::engine {

using fock::Complex;
using fock::Matrix;

struct BathKnot {
  double t = 0.0;  // s
  double n = 0.0;  // thermal occupation
};

/// Piecewise-linear thermal occupations of the acoustic and microwave
/// intrinsic baths, constant outside the knot range, plus a constant
/// waveguide occupation.
class BathSchedule {
 public:
  BathSchedule(std::vector<BathKnot> knots_b, std::vector<BathKnot> knots_c, double n_th_w = 0.0);

  static BathSchedule constant(double n_th_b, double n_th_c, double n_th_w = 0.0);

  double n_b(double t) const { return interpolate(knots_b_, t); }
  double n_c(double t) const { return interpolate(knots_c_, t); }
  double n_w() const noexcept { return n_th_w_; }

  const std::vector<BathKnot>& knots_b() const noexcept { return knots_b_; }
  const std::vector<BathKnot>& knots_c() const noexcept { return knots_c_; }

  double max_n_b() const;
  double max_n_c() const;

  /// Multiplies every intrinsic-bath occupation by `factor` (waveguide untouched).
  BathSchedule scaled(double factor) const;

 private:
  static double interpolate(const std::vector<BathKnot>& knots, double t);

  std::vector<BathKnot> knots_b_;
  std::vector<BathKnot> knots_c_;
  double n_th_w_ = 0.0;
};

/// Device rates in angular frequency (rad/s). This is the only place where
/// the ordinary-frequency configuration is multiplied by 2*pi.
struct Rates {
  double g_pe = 0.0;
  double detuning = 0.0;  // omega_b - omega_c
  double kappa_i_b = 0.0;
  double kappa_e_c = 0.0;
  double kappa_i_c = 0.0;
  double kappa_c() const noexcept { return kappa_e_c + kappa_i_c; }

  static Rates from(const model::SystemParams& params);
};

/// Rates multiplying D(b^dag), D(b), D(c^dag), D(c) at one instant (rad/s).
struct DissipationRates {
  double up_b = 0.0;
  double down_b = 0.0;
  double up_c = 0.0;
  double down_c = 0.0;
};

/// The reduced generator L_r(t) for one parameter set, with precomputed index
/// tables for applying it to density matrices (or any operator) in O(D^2).
class Model {
 public:
  Model(const model::SystemParams& params, const model::PulseProfile& pulse, BathSchedule baths,
        fock::ModeDims dims = fock::ModeDims{10, 10});

  const model::SystemParams& params() const noexcept { return params_; }
  const model::PulseProfile& pulse() const noexcept { return pulse_; }
  const BathSchedule& baths() const noexcept { return baths_; }
  const fock::ModeDims& dims() const noexcept { return dims_; }
  const Rates& rates() const noexcept { return rates_; }

  /// Angular phonon-addition rate Gamma_om(t).
  double gamma_om(double t) const;
  DissipationRates dissipation(double t) const;

  /// The fastest rate the generator can reach over the simulated window.
  double max_rate() const;
  /// Default integration step, 1 / (50 * max_rate).
  double max_step() const { return 1.0 / (50.0 * max_rate()); }

  /// out = L_r(t) x. `x` may be any operator (Hermitian or not).
  void apply(double t, const Matrix& x, Matrix& out) const;

  const fock::Operator& b() const noexcept { return b_; }
  const fock::Operator& c() const noexcept { return c_; }

 private:
  model::SystemParams params_;
  model::PulseProfile pulse_;
  BathSchedule baths_;
  fock::ModeDims dims_;
  Rates rates_;
  fock::Operator b_;
  fock::Operator c_;

  // Per basis index k = n_b * d_c + n_c. Shifting k by d_c moves one acoustic
  // level and by 1 one microwave level; the sqrt(n) factors vanish exactly
  // where a shift would leave the truncated box.
  Eigen::VectorXd nb_, nc_;
  Eigen::VectorXd sqrt_nb_, sqrt_nc_;
  Eigen::VectorXd bbdag_, ccdag_;        // diagonal of b b^dag, c c^dag (truncated)
  Eigen::VectorXd hop_a_amp_, hop_b_amp_;  // C_{k, k - d_c + 1} and C_{k, k + d_c - 1}
};

/// Convenience form: L_r(t) rho.
Matrix liouvillian_apply(double t, const fock::DensityMatrix& rho, const model::SystemParams& params,
                         const model::PulseProfile& pulse, const BathSchedule& baths);

/// Fixed-step classical RK4 on the reduced generator.
class Integrator {
 public:
  explicit Integrator(const Model& model);

  void step(double t, double h, Matrix& x);
  /// Integrates from t0 to t1 in ceil((t1 - t0) / max_step) equal steps.
  void advance(Matrix& x, double t0, double t1, double max_step);

 private:
  const Model& model_;
  Matrix k1_, k2_, k3_, k4_, tmp_;
};

struct EvolveOptions {
  double max_step = 0.0;  // 0 selects Model::max_step()
  bool check_positivity = true;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<fock::DensityMatrix> states;

  double max_trace_drift = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 1.0;  // over checked states
};

inline constexpr double kTraceDriftLimit = 1e-8;
inline constexpr double kHermiticityLimit = 1e-10;

/// Evolves rho0 (given at t_grid.front()) and records the state at every grid
/// time. Throws IntegratorError if trace drift or Hermiticity leaves bounds.
Trajectory evolve(const fock::DensityMatrix& rho0, const Model& model, const std::vector<double>& t_grid,
                  const EvolveOptions& options = {});

/// Heralded state b^dag rho b / Tr{b^dag rho b}; the acoustic mode is mode 0.
fock::DensityMatrix jump_condition(const fock::DensityMatrix& rho);

/// Uniform time grid helper: n points from start with the given spacing.
std::vector<double> uniform_grid(double start, double step, std::size_t n);

/// <op_left(t + tau) op_right(t)> on a product grid of start times and delays.
struct CorrelatorGrid {
  std::vector<double> t_nodes;    // uniform, increasing
  std::vector<double> tau_nodes;  // uniform, starting at 0
  Matrix values;                  // (t index, tau index)

  double t_step() const;
  double tau_step() const;
  bool covers(double t_min, double t_max, double tau_max) const;
  /// Bilinear interpolation; throws RangeError outside the grid.
  Complex at(double t, double tau) const;
};

/// Quantum-regression correlator: propagates op_right * rho(t) under the same
/// generator and traces against op_left. `start_times` must be trajectory
/// times with t + max(tau) inside the trajectory window.
CorrelatorGrid two_time_correlator(const Model& model, const Trajectory& trajectory,
                                   const fock::Operator& op_left, const fock::Operator& op_right,
                                   const std::vector<double>& start_times, const std::vector<double>& tau_grid,
                                   double max_step = 0.0);

}  // namespace spdc::engine
