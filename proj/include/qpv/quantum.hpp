#pragma once

#include <span>
#include <utility>

#include "qpv/matrix.hpp"

namespace qpv {

enum class Outcome { zero, one, inconclusive };

// Basis/bit pair (k1, k2) selecting one of the four BB84 states:
// basis 0 -> (I +- X)/2, basis 1 -> (I +- Y)/2.
struct BasisBit {
  int basis = 0;
  int bit = 0;
};

// A Hermitian matrix validated on construction. When `state` is requested the
// trace-one and positivity invariants are enforced as well.
class DensityMatrix {
 public:
  static DensityMatrix state(const ComplexMatrix& m);
  static DensityMatrix hermitian(const ComplexMatrix& m);

  const ComplexMatrix& matrix() const { return m_; }
  int dim() const { return m_.dim(); }
  bool is_state() const { return is_state_; }

 private:
  DensityMatrix(ComplexMatrix m, bool is_state) : m_(std::move(m)), is_state_(is_state) {}
  ComplexMatrix m_;
  bool is_state_;
};

// POVM element: Hermitian, PSD within tolerance, tagged with its outcome.
class MeasurementOperator {
 public:
  MeasurementOperator(const ComplexMatrix& m, Outcome label);

  const ComplexMatrix& matrix() const { return m_; }
  Outcome label() const { return label_; }

 private:
  ComplexMatrix m_;
  Outcome label_;
};

bool is_complete_povm(std::span<const MeasurementOperator> ops,
                      double tolerance = tol::povm_completeness);

// The four BB84 projectors (I + (-1)^bit * sigma)/2 with sigma = X or Y.
DensityMatrix bb84_state(int basis, int bit);

// (rho_0, rho_1): uniform mixtures of omega_{b,x} (x) omega_{b,y} over the
// four (b,x,y) triples with x XOR y = 0 and 1 respectively.
std::pair<DensityMatrix, DensityMatrix> parity_mixtures();

// Partial transpose on the second qubit of a 4x4 matrix (transposes each 2x2
// block in place). Involutive; preserves trace and Hermiticity.
ComplexMatrix partial_transpose(const ComplexMatrix& m);

struct PsdCheck {
  bool psd = false;
  double min_eigenvalue = 0.0;
};

// min eigenvalue >= -tolerance. Input must be Hermitian within `tolerance`.
PsdCheck is_psd(const ComplexMatrix& m, double tolerance = tol::psd);

// Sum of absolute eigenvalues of a Hermitian matrix.
double trace_norm(const ComplexMatrix& m);

}  // namespace qpv
