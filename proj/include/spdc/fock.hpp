#pragma once

// Truncated Fock-space linear algebra: ladder operators, tensor embedding,
// Lindblad dissipators and a few standard states.

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

namespace spdc::fock {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

/// Ordered per-mode truncation dimensions. Engine states use the ordering
/// (acoustic, microwave).
class ModeDims {
 public:
  ModeDims(std::initializer_list<int> dims);
  explicit ModeDims(std::vector<int> dims);

  std::size_t modes() const noexcept { return dims_.size(); }
  int operator[](std::size_t i) const { return dims_.at(i); }
  int total() const noexcept { return total_; }
  const std::vector<int>& values() const noexcept { return dims_; }

  /// Row-major flat index of a product basis state.
  int flat_index(const std::vector<int>& occupations) const;
  /// Inverse of flat_index.
  std::vector<int> occupations(int flat) const;

  friend bool operator==(const ModeDims& a, const ModeDims& b) { return a.dims_ == b.dims_; }
  friend bool operator!=(const ModeDims& a, const ModeDims& b) { return !(a == b); }

 private:
  std::vector<int> dims_;
  int total_ = 1;
};

class Operator {
 public:
  Operator(Matrix matrix, ModeDims dims);

  const Matrix& matrix() const noexcept { return matrix_; }
  const ModeDims& dims() const noexcept { return dims_; }

  Operator adjoint() const { return {matrix_.adjoint(), dims_}; }

  friend Operator operator*(const Operator& a, const Operator& b);
  friend Operator operator+(const Operator& a, const Operator& b);
  friend Operator operator-(const Operator& a, const Operator& b);
  friend Operator operator*(Complex s, const Operator& a) { return {s * a.matrix_, a.dims_}; }

 private:
  Matrix matrix_;
  ModeDims dims_;
};

struct StateDiagnostics {
  double hermiticity_error = 0.0;  // max |rho - rho^dagger| elementwise
  double trace_error = 0.0;        // |Tr rho - 1|
  double min_eigenvalue = 0.0;
};

/// Density matrix over a truncated product space. Construction checks shape
/// only; physical invariants are reported by diagnostics() and enforced by
/// validate(), never by projection.
class DensityMatrix {
 public:
  static constexpr double kHermiticityTol = 1e-10;
  static constexpr double kTraceTol = 1e-8;
  static constexpr double kEigenvalueFloor = -1e-8;

  DensityMatrix(Matrix matrix, ModeDims dims);

  const Matrix& matrix() const noexcept { return matrix_; }
  const ModeDims& dims() const noexcept { return dims_; }

  Complex trace() const { return matrix_.trace(); }
  DensityMatrix normalized() const;

  StateDiagnostics diagnostics() const;
  /// Throws spdc::Error if any invariant is outside its tolerance.
  void validate() const;

 private:
  Matrix matrix_;
  ModeDims dims_;
};

Operator annihilation(int dim);
Operator creation(int dim);
Operator number(int dim);
Operator identity(const ModeDims& dims);

/// Kronecker product of `op` on mode `mode_index` with identities elsewhere.
Operator embed(const Operator& op, std::size_t mode_index, const ModeDims& dims);

Matrix commutator(const Matrix& a, const Matrix& b);

/// D(L)rho = L rho L^dagger - 1/2 {L^dagger L, rho}.
Matrix dissipator(const Operator& jump, const DensityMatrix& rho);

Complex expectation(const Operator& op, const DensityMatrix& rho);

/// Truncated thermal state. Throws TruncationError if the untruncated
/// geometric tail beyond `dim` carries weight >= kThermalTailLimit.
inline constexpr double kThermalTailLimit = 1e-9;
DensityMatrix thermal_state(int dim, double n_th);

DensityMatrix fock_state(const ModeDims& dims, const std::vector<int>& occupations);
DensityMatrix maximally_mixed(const ModeDims& dims);
DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b);

/// Photon-number distribution of one mode (diagonal of the reduced state).
std::vector<double> number_distribution(const DensityMatrix& rho, std::size_t mode);
/// Distribution of the total excitation number summed over all modes.
std::vector<double> total_number_distribution(const DensityMatrix& rho);

}  // namespace spdc::fock
