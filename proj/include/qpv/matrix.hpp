#pragma once

#include <complex>
#include <initializer_list>
#include <vector>

#include "qpv/constants.hpp"

namespace qpv {

using complexd = std::complex<double>;

// Dense row-major complex matrix. Dimensions in this library are tiny (2 or 4),
// so everything is kept exact and simple: no views, no expression templates.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  explicit ComplexMatrix(int dim) : dim_(dim), a_(static_cast<std::size_t>(dim) * dim) {}

  static ComplexMatrix identity(int dim);
  static ComplexMatrix zero(int dim) { return ComplexMatrix(dim); }
  static ComplexMatrix from_rows(std::initializer_list<std::initializer_list<complexd>> rows);

  int dim() const { return dim_; }
  complexd& at(int r, int c) { return a_[static_cast<std::size_t>(r) * dim_ + c]; }
  const complexd& at(int r, int c) const { return a_[static_cast<std::size_t>(r) * dim_ + c]; }

  ComplexMatrix adjoint() const;
  complexd trace() const;
  bool is_hermitian(double tolerance = tol::hermiticity) const;
  double max_abs() const;

  ComplexMatrix& operator+=(const ComplexMatrix& o);
  ComplexMatrix& operator-=(const ComplexMatrix& o);
  ComplexMatrix& operator*=(complexd s);

  friend ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
  friend ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
  friend ComplexMatrix operator*(complexd s, ComplexMatrix a) { return a *= s; }
  friend ComplexMatrix operator*(ComplexMatrix a, complexd s) { return a *= s; }
  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b);

 private:
  int dim_ = 0;
  std::vector<complexd> a_;
};

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b);
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);

// Pauli matrices in the computational (H/V) basis.
const ComplexMatrix& pauli_x();
const ComplexMatrix& pauli_y();
const ComplexMatrix& pauli_z();

struct HermitianEigen {
  std::vector<double> values;  // ascending
  ComplexMatrix vectors;       // unitary, columns are eigenvectors: A = V diag(values) V^dagger
};

// Cyclic complex Jacobi rotations. Input must be Hermitian within `hermiticity_tol`;
// the solver works on the Hermitian part (A + A^dagger)/2.
HermitianEigen hermitian_eigendecomposition(const ComplexMatrix& m,
                                            double hermiticity_tol = tol::hermiticity);

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m,
                                          double hermiticity_tol = tol::hermiticity);

}  // namespace qpv
