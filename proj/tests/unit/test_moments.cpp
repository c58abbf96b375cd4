#include <doctest.h>

#include <cmath>

#include "spdc/errors.hpp"
#include "spdc/moments.hpp"

using namespace spdc;
using namespace spdc::engine;
using fock::ModeDims;

namespace {

BathSchedule heating_baths() {
  return BathSchedule({{-0.2e-6, 0.01}, {0.1e-6, 0.12}, {0.6e-6, 0.3}}, {{-0.2e-6, 0.02}, {0.4e-6, 0.15}}, 0.01);
}

}  // namespace

TEST_CASE("resonant fixed point: Lyapunov solve against rate equations") {
  auto p = model::reference_device();
  p.g_om = 0.0;
  const Model m(p, model::reference_pulse(), BathSchedule::constant(0.3, 0.1, 0.02));
  const auto n = stationary_moments(m, 0.0);
  const auto r = resonant_rate_solution(m, 0.0);
  CHECK(n(0, 0).real() == doctest::Approx(r.n_b).epsilon(1e-10));
  CHECK(n(1, 1).real() == doctest::Approx(r.n_c).epsilon(1e-10));
  const double kb = m.rates().kappa_i_b, kc = m.rates().kappa_c();
  CHECK(std::abs(n(0, 1) - Complex(0.0, 2.0 * m.rates().g_pe * (r.n_b - r.n_c) / (kb + kc))) < 1e-10 * r.n_b);
  CHECK(std::abs(n(1, 0) - std::conj(n(0, 1))) < 1e-14);

  // Uncoupled: each mode sits at its own bath.
  p.g_pe = 0.0;
  const Model u(p, model::reference_pulse(), BathSchedule::constant(0.3, 0.1, 0.02));
  const auto nu = stationary_moments(u, 0.0);
  CHECK(nu(0, 0).real() == doctest::Approx(0.3));
  const double nc = (550e3 * 0.1 + 1.2e6 * 0.02) / 1.75e6;
  CHECK(nu(1, 1).real() == doctest::Approx(nc));

  auto undamped = model::reference_device();
  undamped.kappa_i_b = undamped.kappa_e_c = undamped.kappa_i_c = 0.0;
  undamped.g_om = 0.0;
  CHECK_THROWS_AS(stationary_moments(Model(undamped, model::reference_pulse(), BathSchedule::constant(0, 0)), 0.0),
                  DegenerateError);
}

TEST_CASE("Gaussian state reproduces its moment matrix") {
  Moments n;
  n << 0.08, Complex(0.01, 0.02), Complex(0.01, -0.02), 0.05;
  const ModeDims dims{10, 10};
  const auto rho = gaussian_state(dims, n);
  rho.validate();
  const auto back = moments_of(rho);
  CHECK((back - n).cwiseAbs().maxCoeff() < 1e-8);

  const auto vac = gaussian_state(dims, Moments::Zero());
  CHECK(vac.matrix()(0, 0).real() == doctest::Approx(1.0).epsilon(1e-12));

  Moments bad;
  bad << -0.1, 0.0, 0.0, 0.1;
  CHECK_THROWS_AS(gaussian_state(dims, bad), ParameterError);
}

TEST_CASE("moment evolution agrees with the Fock-space trajectory") {
  const auto p = model::reference_device();
  const auto pulse = model::reference_pulse();
  const Model m(p, pulse, heating_baths());
  const auto n0 = stationary_moments(m, -1e-6);
  const auto rho0 = gaussian_state(m.dims(), n0);
  const auto grid = uniform_grid(-400e-9, 40e-9, 26);
  const auto traj = evolve(rho0, m, grid, {0.0, false});
  const auto mt = evolve_moments(moments_of(rho0), m, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto fock_n = moments_of(traj.states[i]);
    CHECK((fock_n - mt.moments[i]).cwiseAbs().maxCoeff() < 1e-6 * fock_n.cwiseAbs().maxCoeff());
  }
  CHECK_THROWS_AS(evolve_moments(n0, m, {0.0, -1.0}), RangeError);
}

TEST_CASE("moment correlator matches Fock-space quantum regression") {
  const auto p = model::reference_device();
  const auto pulse = model::reference_pulse();
  const Model m(p, pulse, heating_baths());
  const auto rho0 = gaussian_state(m.dims(), stationary_moments(m, -1e-6));
  const double step = 50e-9;
  const auto grid = uniform_grid(-300e-9, step, 21);
  const auto traj = evolve(rho0, m, grid, {0.0, false});
  const auto starts = uniform_grid(-300e-9, step, 11);
  const auto tau = uniform_grid(0.0, step, 11);
  const auto c = m.c();
  const auto fock_grid = two_time_correlator(m, traj, c.adjoint(), c, starts, tau);

  const auto mt = evolve_moments(moments_of(rho0), m, starts);
  const auto rows = regression_rows(m, starts, tau);
  const auto mg = moment_correlator(rows, mt.moments);
  const double scale = fock_grid.values.cwiseAbs().maxCoeff();
  CHECK((fock_grid.values - mg.values).cwiseAbs().maxCoeff() < 1e-6 * scale);
  // tau = 0 column equals the single-time occupation.
  for (std::size_t i = 0; i < starts.size(); ++i) {
    CHECK(std::abs(mg.values(static_cast<Eigen::Index>(i), 0) - mt.moments[i](1, 1)) < 1e-15);
  }
}
