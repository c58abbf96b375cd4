#include <doctest.h>

#include <cmath>

#include "spdc/errors.hpp"
#include "spdc/fock.hpp"

using namespace spdc;
using namespace spdc::fock;

TEST_CASE("annihilation operator entries") {
  const auto a = annihilation(4);
  CHECK(a.matrix()(0, 1).real() == doctest::Approx(1.0));
  CHECK(a.matrix()(1, 2).real() == doctest::Approx(std::sqrt(2.0)));
  CHECK(a.matrix()(2, 3).real() == doctest::Approx(std::sqrt(3.0)));
  CHECK(std::abs(a.matrix()(1, 0)) == 0.0);
  CHECK_THROWS_AS(annihilation(1), DimensionError);
}

TEST_CASE("truncated commutator is identity except at the top level") {
  const int d = 6;
  const auto a = annihilation(d).matrix();
  const Matrix comm = commutator(a, a.adjoint());
  for (int n = 0; n < d - 1; ++n) CHECK(comm(n, n).real() == doctest::Approx(1.0));
  CHECK(comm(d - 1, d - 1).real() == doctest::Approx(-(d - 1.0)));
}

TEST_CASE("number operator equals a^dag a") {
  const auto a = annihilation(5);
  const Matrix diff = (a.adjoint() * a).matrix() - number(5).matrix();
  CHECK(diff.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("embedding acts on the requested mode only") {
  const ModeDims dims{3, 4};
  const auto b = embed(annihilation(3), 0, dims);
  const auto c = embed(annihilation(4), 1, dims);
  CHECK(b.matrix().rows() == 12);
  // Distinct modes commute.
  CHECK(commutator(b.matrix(), c.matrix()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(commutator(b.matrix(), c.matrix().adjoint()).cwiseAbs().maxCoeff() < 1e-14);
  const auto rho = fock_state(dims, {2, 1});
  CHECK(expectation(b.adjoint() * b, rho).real() == doctest::Approx(2.0));
  CHECK(expectation(c.adjoint() * c, rho).real() == doctest::Approx(1.0));
  CHECK_THROWS_AS(embed(annihilation(3), 2, dims), DimensionError);
  CHECK_THROWS_AS(embed(annihilation(4), 0, dims), DimensionError);
}

TEST_CASE("flat index round trip") {
  const ModeDims dims{3, 5};
  for (int k = 0; k < dims.total(); ++k) CHECK(dims.flat_index(dims.occupations(k)) == k);
  CHECK(dims.flat_index({1, 2}) == 7);
  CHECK_THROWS_AS(dims.flat_index({3, 0}), DimensionError);
  CHECK_THROWS_AS(ModeDims({}), DimensionError);
  CHECK_THROWS_AS(ModeDims({1, 3}), DimensionError);
}

TEST_CASE("operator dimension mismatch is rejected") {
  CHECK_THROWS_AS(Operator(Matrix::Zero(3, 3), ModeDims{2, 2}), DimensionError);
  const auto a = annihilation(3);
  const auto b = annihilation(4);
  CHECK_THROWS_AS(a * b, DimensionError);
  CHECK_THROWS_AS(a + b, DimensionError);
}

TEST_CASE("dissipator is traceless and Hermiticity preserving") {
  const ModeDims dims{4, 3};
  const auto b = embed(annihilation(4), 0, dims);
  Matrix r = Matrix::Random(12, 12);
  r = r * r.adjoint();
  r /= r.trace();
  const DensityMatrix rho(r, dims);
  for (const auto& l : {b, b.adjoint()}) {
    const Matrix d = dissipator(l, rho);
    CHECK(std::abs(d.trace()) < 1e-13);
    CHECK((d - d.adjoint()).cwiseAbs().maxCoeff() < 1e-13);
  }
}

TEST_CASE("thermal state populations and truncation guard") {
  const auto rho = thermal_state(10, 0.1);
  const auto p = number_distribution(rho, 0);
  const double x = 0.1 / 1.1;
  CHECK(p[1] / p[0] == doctest::Approx(x));
  double mean = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) mean += n * p[n];
  CHECK(mean == doctest::Approx(0.1).epsilon(1e-8));
  rho.validate();
  CHECK_THROWS_AS(thermal_state(10, 3.0), TruncationError);
  CHECK_THROWS_AS(thermal_state(10, -0.1), ParameterError);
}

TEST_CASE("density matrix diagnostics flag bad states") {
  const ModeDims dims{2};
  Matrix m(2, 2);
  m << 1.2, 0.0, 0.0, -0.2;
  const DensityMatrix bad(m, dims);
  CHECK(bad.diagnostics().min_eigenvalue == doctest::Approx(-0.2));
  CHECK_THROWS_AS(bad.validate(), Error);
  Matrix h(2, 2);
  h << 0.5, Complex(0.0, 0.1), 0.0, 0.5;
  CHECK_THROWS_AS(DensityMatrix(h, dims).validate(), Error);
  CHECK_THROWS_AS(DensityMatrix(Matrix::Zero(2, 2), dims).normalized(), DegenerateError);
}

TEST_CASE("tensor product and total number distribution") {
  const auto rho = tensor(fock_state(ModeDims{3}, {1}), fock_state(ModeDims{4}, {2}));
  CHECK(rho.dims() == ModeDims{3, 4});
  const auto p = total_number_distribution(rho);
  CHECK(p.size() == 6);
  CHECK(p[3] == doctest::Approx(1.0));
  const auto mixed = maximally_mixed(ModeDims{2, 2});
  CHECK(mixed.trace().real() == doctest::Approx(1.0));
}
