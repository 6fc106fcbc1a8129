#include "qpv/quantum.hpp"

#include <cmath>
#include <stdexcept>

namespace qpv {

DensityMatrix DensityMatrix::state(const ComplexMatrix& m) {
  if (!m.is_hermitian(tol::hermiticity))
    throw std::invalid_argument("DensityMatrix::state: not Hermitian");
  if (std::abs(m.trace() - complexd{1.0}) > tol::trace)
    throw std::invalid_argument("DensityMatrix::state: trace != 1");
  const auto check = is_psd(m, tol::psd);
  if (!check.psd) throw std::invalid_argument("DensityMatrix::state: negative eigenvalue");
  return DensityMatrix(m, true);
}

DensityMatrix DensityMatrix::hermitian(const ComplexMatrix& m) {
  if (!m.is_hermitian(tol::hermiticity))
    throw std::invalid_argument("DensityMatrix::hermitian: not Hermitian");
  return DensityMatrix(m, false);
}

MeasurementOperator::MeasurementOperator(const ComplexMatrix& m, Outcome label)
    : m_(m), label_(label) {
  if (!m.is_hermitian(tol::hermiticity))
    throw std::invalid_argument("MeasurementOperator: not Hermitian");
  const auto check = is_psd(m, tol::psd);
  if (!check.psd) throw std::invalid_argument("MeasurementOperator: negative eigenvalue");
}

bool is_complete_povm(std::span<const MeasurementOperator> ops, double tolerance) {
  if (ops.empty()) return false;
  ComplexMatrix sum = ComplexMatrix::zero(ops.front().matrix().dim());
  for (const auto& op : ops) sum += op.matrix();
  return max_abs_diff(sum, ComplexMatrix::identity(sum.dim())) <= tolerance;
}

DensityMatrix bb84_state(int basis, int bit) {
  if ((basis != 0 && basis != 1) || (bit != 0 && bit != 1))
    throw std::invalid_argument("bb84_state: inputs must be bits");
  const ComplexMatrix& sigma = (basis == 0) ? pauli_x() : pauli_y();
  const double sign = (bit == 0) ? 1.0 : -1.0;
  ComplexMatrix m = ComplexMatrix::identity(2);
  m += sign * sigma;
  m *= 0.5;
  return DensityMatrix::state(m);
}

std::pair<DensityMatrix, DensityMatrix> parity_mixtures() {
  ComplexMatrix rho0 = ComplexMatrix::zero(4);
  ComplexMatrix rho1 = ComplexMatrix::zero(4);
  for (int b = 0; b < 2; ++b)
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        const ComplexMatrix term =
            tensor(bb84_state(b, x).matrix(), bb84_state(b, y).matrix());
        ((x ^ y) == 0 ? rho0 : rho1) += term;
      }
  rho0 *= 0.25;
  rho1 *= 0.25;
  return {DensityMatrix::state(rho0), DensityMatrix::state(rho1)};
}

ComplexMatrix partial_transpose(const ComplexMatrix& m) {
  if (m.dim() != 4) throw std::invalid_argument("partial_transpose: dimension must be 4");
  ComplexMatrix out(4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          out.at(2 * a + j, 2 * b + i) = m.at(2 * a + i, 2 * b + j);
  return out;
}

PsdCheck is_psd(const ComplexMatrix& m, double tolerance) {
  const auto values = hermitian_eigenvalues(m, tolerance);
  const double min_eig = values.front();
  return {min_eig >= -tolerance, min_eig};
}

double trace_norm(const ComplexMatrix& m) {
  double sum = 0.0;
  for (double v : hermitian_eigenvalues(m)) sum += std::abs(v);
  return sum;
}

}  // namespace qpv
