#include <doctest.h>

#include <cmath>
#include <numbers>

#include "spdc/engine.hpp"
#include "spdc/errors.hpp"

using namespace spdc;
using namespace spdc::engine;
using fock::DensityMatrix;
using fock::ModeDims;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

model::SystemParams quiet_device() {
  auto p = model::reference_device();
  p.g_om = 0.0;
  p.g_pe = 0.0;
  p.kappa_i_b = 0.0;
  p.kappa_e_c = 0.0;
  p.kappa_i_c = 0.0;
  return p;
}

// Dense reference generator assembled from fock::dissipator calls.
Matrix reference_generator(const Model& m, double t, const DensityMatrix& rho) {
  const auto& dims = m.dims();
  const auto b = m.b();
  const auto c = m.c();
  const auto d = m.dissipation(t);
  const Matrix h = kTwoPi * model::engine_hamiltonian(m.params(), dims).matrix();
  Matrix out = Complex(0.0, -1.0) * fock::commutator(h, rho.matrix());
  out += d.up_b * fock::dissipator(b.adjoint(), rho) + d.down_b * fock::dissipator(b, rho);
  out += d.up_c * fock::dissipator(c.adjoint(), rho) + d.down_c * fock::dissipator(c, rho);
  return out;
}

DensityMatrix random_state(const ModeDims& dims) {
  Matrix r = Matrix::Random(dims.total(), dims.total());
  r = r * r.adjoint();
  r /= r.trace();
  return {r, dims};
}

double mean(const fock::Operator& op, const DensityMatrix& rho) { return fock::expectation(op, rho).real(); }

}  // namespace

TEST_CASE("bath schedule interpolation and validation") {
  const BathSchedule s({{0.0, 0.0}, {1e-6, 1.0}, {3e-6, 0.5}}, {{0.0, 0.2}}, 0.1);
  CHECK(s.n_b(-1.0) == 0.0);
  CHECK(s.n_b(0.5e-6) == doctest::Approx(0.5));
  CHECK(s.n_b(2e-6) == doctest::Approx(0.75));
  CHECK(s.n_b(10e-6) == doctest::Approx(0.5));
  CHECK(s.n_c(5.0) == doctest::Approx(0.2));
  CHECK(s.max_n_b() == doctest::Approx(1.0));
  CHECK(s.scaled(2.0).n_b(1e-6) == doctest::Approx(2.0));
  CHECK(s.scaled(2.0).n_w() == doctest::Approx(0.1));
  CHECK_THROWS_AS(BathSchedule({{0.0, 0.1}, {0.0, 0.2}}, {{0.0, 0.0}}), ParameterError);
  CHECK_THROWS_AS(BathSchedule({{0.0, -0.1}}, {{0.0, 0.0}}), ParameterError);
  CHECK_THROWS_AS(BathSchedule({}, {{0.0, 0.0}}), ParameterError);
}

TEST_CASE("structured generator matches dense dissipator sums") {
  auto p = model::reference_device();
  p.omega_b += 3e6;
  p.n_th_w = 0.03;
  const BathSchedule baths({{-1e-6, 0.05}, {1e-6, 0.4}}, {{-1e-6, 0.02}, {2e-6, 0.3}}, p.n_th_w);
  for (const auto& dims : {ModeDims{4, 3}, ModeDims{10, 10}}) {
    const Model m(p, model::reference_pulse(), baths, dims);
    const auto rho = random_state(dims);
    for (double t : {-2e-6, -40e-9, 0.0, 0.5e-6}) {
      Matrix fast;
      m.apply(t, rho.matrix(), fast);
      const Matrix ref = reference_generator(m, t, rho);
      CHECK((fast - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
      CHECK(std::abs(fast.trace()) < 1e-12 * ref.cwiseAbs().maxCoeff());
    }
    // Non-Hermitian input (correlator use).
    const Matrix x = Matrix::Random(dims.total(), dims.total());
    Matrix fast;
    m.apply(0.0, x, fast);
    const Matrix ref = reference_generator(m, 0.0, DensityMatrix(x, dims));
    CHECK((fast - ref).cwiseAbs().maxCoeff() <= 1e-12 * ref.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("liouvillian_apply trivial limits") {
  const ModeDims dims{4, 4};
  const auto rho = random_state(dims);
  const auto zero = liouvillian_apply(0.0, rho, quiet_device(), model::reference_pulse(), BathSchedule::constant(0, 0));
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

  auto p = quiet_device();
  p.g_om = 270e3;
  const auto pulse = model::reference_pulse();
  const auto vac = fock::fock_state(dims, {0, 0});
  const auto d = liouvillian_apply(0.0, vac, p, pulse, BathSchedule::constant(0, 0));
  const auto nb = fock::embed(fock::number(4), 0, dims);
  const double gamma = kTwoPi * model::scattering_rate(0.0, p, pulse);
  CHECK((nb.matrix() * d).trace().real() == doctest::Approx(gamma).epsilon(1e-12));
}

TEST_CASE("constant baths without coupling: thermal product is stationary") {
  auto p = model::reference_device();
  p.g_om = 0.0;
  p.g_pe = 0.0;
  p.n_th_w = 0.04;
  const double nb = 0.1, nc = 0.15;
  const double nc_ss = (p.kappa_i_c * nc + p.kappa_e_c * p.n_th_w) / (p.kappa_i_c + p.kappa_e_c);
  const ModeDims dims{10, 10};
  const auto rho = fock::tensor(fock::thermal_state(10, nb), fock::thermal_state(10, nc_ss));
  const auto l = liouvillian_apply(0.0, rho, p, model::reference_pulse(), BathSchedule::constant(nb, nc, p.n_th_w));
  const double scale = kTwoPi * (p.kappa_i_c + p.kappa_e_c);
  CHECK(l.cwiseAbs().maxCoeff() / scale < 1e-8);

  // Approach from vacuum reproduces the rate-equation fixed point.
  const Model m(p, model::reference_pulse(), BathSchedule::constant(nb, nc, p.n_th_w), dims);
  const auto traj = evolve(fock::fock_state(dims, {0, 0}), m, uniform_grid(0.0, 4e-6, 6), {0.0, false});
  const auto& last = traj.states.back();
  CHECK(mean(m.b().adjoint() * m.b(), last) == doctest::Approx(nb).epsilon(1e-6));
  CHECK(mean(m.c().adjoint() * m.c(), last) == doctest::Approx(nc_ss).epsilon(1e-6));
}

TEST_CASE("piezo swap follows sin^2(2 pi g_pe t)") {
  auto p = quiet_device();
  p.g_pe = 800e3;
  const ModeDims dims{3, 3};
  const Model m(p, model::reference_pulse(), BathSchedule::constant(0, 0), dims);
  const auto traj = evolve(fock::fock_state(dims, {1, 0}), m, uniform_grid(0.0, 156.25e-9 / 8, 17));
  const auto nc = m.c().adjoint() * m.c();
  const auto nb = m.b().adjoint() * m.b();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double s = std::sin(kTwoPi * 800e3 * traj.times[i]);
    CHECK(mean(nc, traj.states[i]) == doctest::Approx(s * s).epsilon(1e-6));
    CHECK(mean(nb, traj.states[i]) + mean(nc, traj.states[i]) == doctest::Approx(1.0).epsilon(1e-8));
  }
  CHECK(mean(nc, traj.states[16]) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(traj.times[16] == doctest::Approx(312.5e-9));
  CHECK(traj.max_trace_drift < kTraceDriftLimit);
}

TEST_CASE("number conservation under coupling alone") {
  auto p = quiet_device();
  p.g_pe = 800e3;
  p.omega_b += 1.3e6;
  const ModeDims dims{6, 6};
  const Model m(p, model::reference_pulse(), BathSchedule::constant(0, 0), dims);
  const auto rho0 = fock::tensor(fock::thermal_state(6, 0.02), fock::fock_state(ModeDims{6}, {2}));
  // Two-quantum coherences rotate faster than the single-quantum rates the
  // default step is sized for.
  EvolveOptions opt;
  opt.max_step = 0.25 * m.max_step();
  const auto traj = evolve(rho0, m, uniform_grid(0.0, 50e-9, 20), opt);
  CHECK(traj.min_eigenvalue > fock::DensityMatrix::kEigenvalueFloor);
  const auto ntot = m.b().adjoint() * m.b() + m.c().adjoint() * m.c();
  const double n0 = mean(ntot, rho0);
  for (const auto& s : traj.states) CHECK(std::abs(mean(ntot, s) - n0) < 1e-8);
}

TEST_CASE("pure acoustic decay") {
  auto p = quiet_device();
  p.kappa_i_b = 150e3;
  const ModeDims dims{3, 2};
  const Model m(p, model::reference_pulse(), BathSchedule::constant(0, 0), dims);
  const auto traj = evolve(fock::fock_state(dims, {1, 0}), m, uniform_grid(0.0, 0.5e-6, 9));
  const auto nb = m.b().adjoint() * m.b();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    CHECK(std::abs(mean(nb, traj.states[i]) - std::exp(-kTwoPi * 150e3 * traj.times[i])) < 1e-6);
  }
}

TEST_CASE("weak pump adds integral of Gamma_om quanta") {
  auto p = quiet_device();
  p.g_om = 270e3;
  p.g_pe = 800e3;
  const auto pulse = model::reference_pulse();
  const ModeDims dims{4, 4};
  const Model m(p, pulse, BathSchedule::constant(0, 0), dims);
  const auto traj = evolve(fock::fock_state(dims, {0, 0}), m, uniform_grid(-640e-9, 40e-9, 33));
  const auto ntot = m.b().adjoint() * m.b() + m.c().adjoint() * m.c();
  const double expected = model::integrated_jump_probability(p, pulse);
  CHECK(mean(ntot, traj.states.back()) == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("weak pump linearity with dissipation") {
  auto p = model::reference_device();
  const ModeDims dims{5, 5};
  const auto baths = BathSchedule::constant(0.0, 0.0);
  auto pulse = model::reference_pulse();
  const auto grid = uniform_grid(-480e-9, 40e-9, 25);
  const Model m1(p, pulse, baths, dims);
  pulse.n_a_peak *= 2.0;
  const Model m2(p, pulse, baths, dims);
  const auto rho0 = fock::fock_state(dims, {0, 0});
  const auto t1 = evolve(rho0, m1, grid, {0.0, false});
  const auto t2 = evolve(rho0, m2, grid, {0.0, false});
  const auto ntot = m1.b().adjoint() * m1.b() + m1.c().adjoint() * m1.c();
  CHECK(mean(ntot, t2.states.back()) / mean(ntot, t1.states.back()) == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("coarse step is reported as an integrator error") {
  const auto p = model::reference_device();
  const ModeDims dims{4, 4};
  const Model m(p, model::reference_pulse(), BathSchedule::constant(0.05, 0.05), dims);
  EvolveOptions opt;
  opt.max_step = 2e-6;
  CHECK_THROWS_AS(evolve(fock::fock_state(dims, {1, 0}), m, uniform_grid(0.0, 2e-6, 40), opt), IntegratorError);
  CHECK_THROWS_AS(evolve(fock::fock_state(dims, {1, 0}), m, {0.0, 0.0}), RangeError);
}

TEST_CASE("jump conditioning") {
  const ModeDims dims{4, 3};
  const auto vac = fock::fock_state(dims, {0, 0});
  const auto j = jump_condition(vac);
  CHECK(std::abs(j.matrix()(dims.flat_index({1, 0}), dims.flat_index({1, 0})) - 1.0) < 1e-14);

  // Photon-added thermal state: <n> = 2 nbar + 1, g2 = 2x(2+x)/(1+x)^2.
  const ModeDims big{40, 2};
  const double nbar = 0.5;
  const auto th = fock::tensor(fock::thermal_state(40, nbar), fock::fock_state(ModeDims{2}, {0}));
  const auto pj = jump_condition(th);
  const auto p = fock::number_distribution(pj, 0);
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) {
    m1 += n * p[n];
    m2 += n * (n - 1.0) * p[n];
  }
  CHECK(m1 == doctest::Approx(2.0 * nbar + 1.0).epsilon(1e-8));
  const double x = nbar / (nbar + 1.0);
  CHECK(m2 / (m1 * m1) == doctest::Approx(2.0 * x * (2.0 + x) / ((1.0 + x) * (1.0 + x))).epsilon(1e-8));
  CHECK(m2 / (m1 * m1) == doctest::Approx(0.875).epsilon(1e-8));

  // Raises mean phonon number on arbitrary finite-support states.
  const auto r = random_state(dims);
  const auto nb = fock::embed(fock::number(4), 0, dims);
  Matrix trimmed = r.matrix();
  for (int k = 0; k < dims.total(); ++k) {
    if (dims.occupations(k)[0] == 3) {
      trimmed.row(k).setZero();
      trimmed.col(k).setZero();
    }
  }
  const DensityMatrix finite(trimmed / trimmed.trace(), dims);
  CHECK(mean(nb, jump_condition(finite)) > mean(nb, finite));

  CHECK_THROWS_AS(jump_condition(fock::fock_state(dims, {3, 0})), DegenerateError);
}

TEST_CASE("regression correlator of a damped thermal mode") {
  auto p = quiet_device();
  p.kappa_i_c = 550e3;
  p.kappa_e_c = 1.2e6;
  const double n = 0.2;
  const ModeDims dims{2, 14};
  const Model m(p, model::reference_pulse(), BathSchedule::constant(0.0, n, n), dims);
  const auto rho = fock::tensor(fock::fock_state(ModeDims{2}, {0}), fock::thermal_state(14, n));
  const auto c = m.c();
  const auto traj = evolve(rho, m, uniform_grid(0.0, 50e-9, 21));
  const auto tau = uniform_grid(0.0, 50e-9, 11);
  const auto g = two_time_correlator(m, traj, c.adjoint(), c, uniform_grid(0.0, 50e-9, 11), tau);
  const double kappa = p.kappa_c();
  for (Eigen::Index i = 0; i < g.values.rows(); ++i) {
    for (Eigen::Index jj = 0; jj < g.values.cols(); ++jj) {
      const double expected = n * std::exp(-std::numbers::pi * kappa * tau[jj]);
      CHECK(std::abs(std::abs(g.values(i, jj)) - expected) < 1e-6);
    }
    CHECK(std::abs(g.values(i, 0) - fock::expectation(c.adjoint() * c, traj.states[i])) < 1e-8);
  }
  const Complex mid = 0.25 * (g.values(2, 1) + g.values(2, 2) + g.values(3, 1) + g.values(3, 2));
  CHECK(std::abs(g.at(125e-9, 75e-9) - mid) < 1e-14);
  CHECK_THROWS_AS(g.at(600e-9, 0.0), RangeError);
  CHECK_THROWS_AS(two_time_correlator(m, traj, c.adjoint(), c, uniform_grid(0.0, 50e-9, 12), tau), RangeError);
  CHECK_THROWS_AS(two_time_correlator(m, traj, c.adjoint(), c, {25e-9}, tau), RangeError);
}

TEST_CASE("correlator Hermitian symmetry on a coupled stationary state") {
  auto p = model::reference_device();
  p.g_om = 0.0;
  p.n_th_w = 0.05;
  const double n = 0.05;
  const ModeDims dims{8, 8};
  const Model m(p, model::reference_pulse(), BathSchedule::constant(n, n, n), dims);
  const auto rho = fock::tensor(fock::thermal_state(8, n), fock::thermal_state(8, n));
  const auto c = m.c();
  const double step = 40e-9;
  const auto traj = evolve(rho, m, uniform_grid(0.0, step, 11));
  const auto tau = uniform_grid(0.0, step, 6);
  const auto g = two_time_correlator(m, traj, c.adjoint(), c, {0.0}, tau);

  // Reverse ordering <c^dag(t) c(t + tau)> = Tr[c Lambda(rho c^dag)].
  Integrator integ(m);
  Matrix x = rho.matrix() * c.adjoint().matrix();
  for (std::size_t j = 0; j < tau.size(); ++j) {
    if (j > 0) integ.advance(x, tau[j - 1], tau[j], m.max_step());
    const Complex rev = (c.matrix() * x).trace();
    CHECK(std::abs(g.values(0, static_cast<Eigen::Index>(j)) - std::conj(rev)) < 1e-8);
  }
}

TEST_CASE("bilinear interpolation is exact on bilinear data") {
  CorrelatorGrid g;
  g.t_nodes = uniform_grid(0.0, 1.0, 4);
  g.tau_nodes = uniform_grid(0.0, 0.5, 5);
  g.values.resize(4, 5);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 5; ++j) g.values(i, j) = Complex(1.0 + 2.0 * i + 3.0 * 0.5 * j, 0.5 * i * 0.5 * j);
  }
  const Complex v = g.at(1.3, 0.7);
  CHECK(v.real() == doctest::Approx(1.0 + 2.0 * 1.3 + 3.0 * 0.7));
  CHECK(v.imag() == doctest::Approx(0.5 * 1.3 * 0.7));
  CHECK(g.at(3.0, 2.0).real() == doctest::Approx(1.0 + 6.0 + 6.0));
  CHECK_THROWS_AS(g.at(3.5, 0.0), RangeError);
  CHECK_THROWS_AS(g.at(1.0, 2.5), RangeError);
}

TEST_CASE("truncation sensitivity: 10x10 against 12x12") {
  const auto p = model::reference_device();
  const auto pulse = model::reference_pulse();
  const auto baths = BathSchedule({{-0.5e-6, 0.02}, {0.5e-6, 0.15}}, {{-0.5e-6, 0.01}, {0.5e-6, 0.08}});
  const auto grid = uniform_grid(-400e-9, 80e-9, 11);
  double nc[2];
  double nb[2];
  int idx = 0;
  for (int d : {10, 12}) {
    const ModeDims dims{d, d};
    const Model m(p, pulse, baths, dims);
    const auto rho0 = fock::tensor(fock::thermal_state(d, 0.02), fock::thermal_state(d, 0.01));
    const auto traj = evolve(rho0, m, grid, {0.0, false});
    nc[idx] = mean(m.c().adjoint() * m.c(), traj.states.back());
    nb[idx] = mean(m.b().adjoint() * m.b(), traj.states.back());
    ++idx;
  }
  CHECK(std::abs(nc[0] - nc[1]) < 1e-4 * nc[1]);
  CHECK(std::abs(nb[0] - nb[1]) < 1e-4 * nb[1]);
}
