#include "qpv/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qpv {

ComplexMatrix ComplexMatrix::identity(int dim) {
  ComplexMatrix m(dim);
  for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::from_rows(
    std::initializer_list<std::initializer_list<complexd>> rows) {
  const int dim = static_cast<int>(rows.size());
  ComplexMatrix m(dim);
  int r = 0;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != dim)
      throw std::invalid_argument("ComplexMatrix::from_rows: ragged rows");
    int c = 0;
    for (const auto& v : row) m.at(r, c++) = v;
    ++r;
  }
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix m(dim_);
  for (int r = 0; r < dim_; ++r)
    for (int c = 0; c < dim_; ++c) m.at(c, r) = std::conj(at(r, c));
  return m;
}

complexd ComplexMatrix::trace() const {
  complexd t = 0.0;
  for (int i = 0; i < dim_; ++i) t += at(i, i);
  return t;
}

bool ComplexMatrix::is_hermitian(double tolerance) const {
  for (int r = 0; r < dim_; ++r)
    for (int c = r; c < dim_; ++c)
      if (std::abs(at(r, c) - std::conj(at(c, r))) > tolerance) return false;
  return true;
}

double ComplexMatrix::max_abs() const {
  double m = 0.0;
  for (const auto& v : a_) m = std::max(m, std::abs(v));
  return m;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
  if (dim_ != o.dim_) throw std::invalid_argument("matrix dimension mismatch");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
  if (dim_ != o.dim_) throw std::invalid_argument("matrix dimension mismatch");
  for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(complexd s) {
  for (auto& v : a_) v *= s;
  return *this;
}

ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim_ != b.dim_) throw std::invalid_argument("matrix dimension mismatch");
  const int n = a.dim_;
  ComplexMatrix out(n);
  for (int r = 0; r < n; ++r)
    for (int k = 0; k < n; ++k) {
      const complexd ark = a.at(r, k);
      if (ark == complexd{}) continue;
      for (int c = 0; c < n; ++c) out.at(r, c) += ark * b.at(k, c);
    }
  return out;
}

ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
  const int na = a.dim();
  const int nb = b.dim();
  ComplexMatrix out(na * nb);
  for (int ra = 0; ra < na; ++ra)
    for (int ca = 0; ca < na; ++ca)
      for (int rb = 0; rb < nb; ++rb)
        for (int cb = 0; cb < nb; ++cb)
          out.at(ra * nb + rb, ca * nb + cb) = a.at(ra, ca) * b.at(rb, cb);
  return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("matrix dimension mismatch");
  double m = 0.0;
  for (int r = 0; r < a.dim(); ++r)
    for (int c = 0; c < a.dim(); ++c) m = std::max(m, std::abs(a.at(r, c) - b.at(r, c)));
  return m;
}

const ComplexMatrix& pauli_x() {
  static const ComplexMatrix m = ComplexMatrix::from_rows({{0.0, 1.0}, {1.0, 0.0}});
  return m;
}

const ComplexMatrix& pauli_y() {
  static const ComplexMatrix m =
      ComplexMatrix::from_rows({{0.0, complexd(0.0, -1.0)}, {complexd(0.0, 1.0), 0.0}});
  return m;
}

const ComplexMatrix& pauli_z() {
  static const ComplexMatrix m = ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, -1.0}});
  return m;
}

namespace {

double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (int r = 0; r < a.dim(); ++r)
    for (int c = 0; c < a.dim(); ++c)
      if (r != c) s += std::norm(a.at(r, c));
  return std::sqrt(s);
}

}  // namespace

HermitianEigen hermitian_eigendecomposition(const ComplexMatrix& m, double hermiticity_tol) {
  if (!m.is_hermitian(hermiticity_tol))
    throw std::invalid_argument("hermitian_eigendecomposition: input is not Hermitian");

  const int n = m.dim();
  // Work on the exact Hermitian part so roundoff in the input cannot leak
  // imaginary components onto the diagonal.
  ComplexMatrix a(n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) a.at(r, c) = 0.5 * (m.at(r, c) + std::conj(m.at(c, r)));
  ComplexMatrix v = ComplexMatrix::identity(n);

  const double scale = std::max(a.max_abs(), 1.0);
  const double stop = 1e-15 * scale * n;

  for (int sweep = 0; sweep < 64 && off_diagonal_norm(a) > stop; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const complexd apq = a.at(p, q);
        const double mag = std::abs(apq);
        if (mag <= 1e-18 * scale) continue;

        // Phase to make the pivot real, then a real Jacobi rotation.
        const complexd phase = apq / mag;  // e^{i arg(apq)}
        const double app = a.at(p, p).real();
        const double aqq = a.at(q, q).real();
        const double tau = (aqq - app) / (2.0 * mag);
        const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                      : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // Unitary on the (p,q) plane: U = diag(1, conj(phase)) * [[c, s], [-s, c]].
        const complexd upp = c;
        const complexd upq = s;
        const complexd uqp = -s * std::conj(phase);
        const complexd uqq = c * std::conj(phase);

        for (int k = 0; k < n; ++k) {  // A <- A U (columns p, q)
          const complexd akp = a.at(k, p);
          const complexd akq = a.at(k, q);
          a.at(k, p) = akp * upp + akq * uqp;
          a.at(k, q) = akp * upq + akq * uqq;
        }
        for (int k = 0; k < n; ++k) {  // A <- U^dagger A (rows p, q)
          const complexd apk = a.at(p, k);
          const complexd aqk = a.at(q, k);
          a.at(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
          a.at(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        for (int k = 0; k < n; ++k) {  // V <- V U
          const complexd vkp = v.at(k, p);
          const complexd vkq = v.at(k, q);
          v.at(k, p) = vkp * upp + vkq * uqp;
          v.at(k, q) = vkp * upq + vkq * uqq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a.at(i, i).real() < a.at(j, j).real(); });

  HermitianEigen out;
  out.values.resize(n);
  out.vectors = ComplexMatrix(n);
  for (int c = 0; c < n; ++c) {
    out.values[c] = a.at(order[c], order[c]).real();
    for (int r = 0; r < n; ++r) out.vectors.at(r, c) = v.at(r, order[c]);
  }
  return out;
}

std::vector<double> hermitian_eigenvalues(const ComplexMatrix& m, double hermiticity_tol) {
  return hermitian_eigendecomposition(m, hermiticity_tol).values;
}

}  // namespace qpv
