#include "spdc/fock.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spdc/errors.hpp"

namespace spdc::fock {

ModeDims::ModeDims(std::initializer_list<int> dims) : ModeDims(std::vector<int>(dims)) {}

ModeDims::ModeDims(std::vector<int> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw DimensionError("ModeDims: at least one mode is required");
  for (int d : dims_) {
    if (d < 2) throw DimensionError("ModeDims: truncation dimension must be >= 2, got " + std::to_string(d));
    total_ *= d;
  }
}

int ModeDims::flat_index(const std::vector<int>& occupations) const {
  if (occupations.size() != dims_.size()) throw DimensionError("flat_index: wrong number of modes");
  int flat = 0;
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (occupations[i] < 0 || occupations[i] >= dims_[i]) {
      throw DimensionError("flat_index: occupation outside truncation");
    }
    flat = flat * dims_[i] + occupations[i];
  }
  return flat;
}

std::vector<int> ModeDims::occupations(int flat) const {
  std::vector<int> occ(dims_.size());
  for (std::size_t i = dims_.size(); i-- > 0;) {
    occ[i] = flat % dims_[i];
    flat /= dims_[i];
  }
  return occ;
}

Operator::Operator(Matrix matrix, ModeDims dims) : matrix_(std::move(matrix)), dims_(std::move(dims)) {
  if (matrix_.rows() != dims_.total() || matrix_.cols() != dims_.total()) {
    throw DimensionError("Operator: matrix side " + std::to_string(matrix_.rows()) + "x" +
                         std::to_string(matrix_.cols()) + " does not match Hilbert dimension " +
                         std::to_string(dims_.total()));
  }
}

namespace {

void require_same_dims(const ModeDims& a, const ModeDims& b, const char* where) {
  if (a != b) throw DimensionError(std::string(where) + ": mode dimensions differ");
}

}  // namespace

Operator operator*(const Operator& a, const Operator& b) {
  require_same_dims(a.dims_, b.dims_, "Operator product");
  return {a.matrix_ * b.matrix_, a.dims_};
}

Operator operator+(const Operator& a, const Operator& b) {
  require_same_dims(a.dims_, b.dims_, "Operator sum");
  return {a.matrix_ + b.matrix_, a.dims_};
}

Operator operator-(const Operator& a, const Operator& b) {
  require_same_dims(a.dims_, b.dims_, "Operator difference");
  return {a.matrix_ - b.matrix_, a.dims_};
}

DensityMatrix::DensityMatrix(Matrix matrix, ModeDims dims) : matrix_(std::move(matrix)), dims_(std::move(dims)) {
  if (matrix_.rows() != dims_.total() || matrix_.cols() != dims_.total()) {
    throw DimensionError("DensityMatrix: matrix side does not match Hilbert dimension");
  }
}

DensityMatrix DensityMatrix::normalized() const {
  const Complex tr = trace();
  if (std::abs(tr) == 0.0) throw DegenerateError("DensityMatrix: cannot normalize a zero-trace matrix");
  return {matrix_ / tr, dims_};
}

StateDiagnostics DensityMatrix::diagnostics() const {
  StateDiagnostics d;
  d.hermiticity_error = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  d.trace_error = std::abs(matrix_.trace() - Complex(1.0));
  const Matrix herm = 0.5 * (matrix_ + matrix_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(herm, Eigen::EigenvaluesOnly);
  d.min_eigenvalue = solver.eigenvalues().minCoeff();
  return d;
}

void DensityMatrix::validate() const {
  const auto d = diagnostics();
  if (d.hermiticity_error > kHermiticityTol) {
    throw Error("DensityMatrix: Hermiticity error " + std::to_string(d.hermiticity_error));
  }
  if (d.trace_error > kTraceTol) throw Error("DensityMatrix: trace error " + std::to_string(d.trace_error));
  if (d.min_eigenvalue < kEigenvalueFloor) {
    throw Error("DensityMatrix: minimum eigenvalue " + std::to_string(d.min_eigenvalue));
  }
}

Operator annihilation(int dim) {
  if (dim < 2) throw DimensionError("annihilation: dim must be >= 2, got " + std::to_string(dim));
  Matrix a = Matrix::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return {std::move(a), ModeDims{dim}};
}

Operator creation(int dim) { return annihilation(dim).adjoint(); }

Operator number(int dim) {
  if (dim < 2) throw DimensionError("number: dim must be >= 2");
  Matrix n = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
  return {std::move(n), ModeDims{dim}};
}

Operator identity(const ModeDims& dims) { return {Matrix::Identity(dims.total(), dims.total()), dims}; }

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace

Operator embed(const Operator& op, std::size_t mode_index, const ModeDims& dims) {
  if (mode_index >= dims.modes()) {
    throw DimensionError("embed: mode index " + std::to_string(mode_index) + " out of range");
  }
  if (op.dims().modes() != 1 || op.dims()[0] != dims[mode_index]) {
    throw DimensionError("embed: operator dimension does not match mode " + std::to_string(mode_index));
  }
  Matrix out = Matrix::Identity(1, 1);
  for (std::size_t m = 0; m < dims.modes(); ++m) {
    const Matrix factor = (m == mode_index) ? op.matrix() : Matrix(Matrix::Identity(dims[m], dims[m]));
    out = kron(out, factor);
  }
  return {std::move(out), dims};
}

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

Matrix dissipator(const Operator& jump, const DensityMatrix& rho) {
  require_same_dims(jump.dims(), rho.dims(), "dissipator");
  const Matrix& l = jump.matrix();
  const Matrix ldl = l.adjoint() * l;
  const Matrix& r = rho.matrix();
  return l * r * l.adjoint() - 0.5 * (ldl * r + r * ldl);
}

Complex expectation(const Operator& op, const DensityMatrix& rho) {
  require_same_dims(op.dims(), rho.dims(), "expectation");
  return (op.matrix() * rho.matrix()).trace();
}

DensityMatrix thermal_state(int dim, double n_th) {
  if (dim < 2) throw DimensionError("thermal_state: dim must be >= 2");
  if (!(n_th >= 0.0)) throw ParameterError("thermal_state: n_th must be non-negative");
  const double x = n_th / (n_th + 1.0);
  const double tail = std::pow(x, dim);
  if (tail >= kThermalTailLimit) {
    throw TruncationError("thermal_state: truncation tail weight " + std::to_string(tail) + " at dim " +
                          std::to_string(dim) + " for n_th " + std::to_string(n_th));
  }
  Matrix rho = Matrix::Zero(dim, dim);
  double norm = 0.0;
  double p = 1.0;
  for (int n = 0; n < dim; ++n) {
    rho(n, n) = p;
    norm += p;
    p *= x;
  }
  rho /= norm;
  return {std::move(rho), ModeDims{dim}};
}

DensityMatrix fock_state(const ModeDims& dims, const std::vector<int>& occupations) {
  const int k = dims.flat_index(occupations);
  Matrix rho = Matrix::Zero(dims.total(), dims.total());
  rho(k, k) = 1.0;
  return {std::move(rho), dims};
}

DensityMatrix maximally_mixed(const ModeDims& dims) {
  const int n = dims.total();
  return {Matrix::Identity(n, n) / static_cast<double>(n), dims};
}

DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b) {
  std::vector<int> dims = a.dims().values();
  dims.insert(dims.end(), b.dims().values().begin(), b.dims().values().end());
  return {kron(a.matrix(), b.matrix()), ModeDims(std::move(dims))};
}

std::vector<double> number_distribution(const DensityMatrix& rho, std::size_t mode) {
  const auto& dims = rho.dims();
  if (mode >= dims.modes()) throw DimensionError("number_distribution: mode out of range");
  std::vector<double> p(dims[mode], 0.0);
  for (int k = 0; k < dims.total(); ++k) p[dims.occupations(k)[mode]] += rho.matrix()(k, k).real();
  return p;
}

std::vector<double> total_number_distribution(const DensityMatrix& rho) {
  const auto& dims = rho.dims();
  int max_total = 0;
  for (int d : dims.values()) max_total += d - 1;
  std::vector<double> p(max_total + 1, 0.0);
  for (int k = 0; k < dims.total(); ++k) {
    const auto occ = dims.occupations(k);
    int n = 0;
    for (int o : occ) n += o;
    p[n] += rho.matrix()(k, k).real();
  }
  return p;
}

}  // namespace spdc::fock
