#include <doctest.h>

#include "qpv/matrix.hpp"
#include "qpv/rng.hpp"

using namespace qpv;

namespace {

ComplexMatrix random_hermitian(int dim, RngStream& rng) {
  ComplexMatrix m(dim);
  for (int r = 0; r < dim; ++r) {
    m.at(r, r) = 2.0 * rng.uniform() - 1.0;
    for (int c = r + 1; c < dim; ++c) {
      const complexd v{2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
      m.at(r, c) = v;
      m.at(c, r) = std::conj(v);
    }
  }
  return m;
}

}  // namespace

TEST_SUITE("matrix") {

TEST_CASE("basic algebra") {
  const ComplexMatrix id = ComplexMatrix::identity(2);
  CHECK(id.trace() == complexd{2.0});
  const ComplexMatrix x = pauli_x();
  CHECK(max_abs_diff(x * x, id) == doctest::Approx(0.0));
  const ComplexMatrix y = pauli_y();
  CHECK(y.is_hermitian());
  CHECK(max_abs_diff(y.adjoint(), y) == doctest::Approx(0.0));

  // XY = iZ
  ComplexMatrix iz = pauli_z();
  iz *= complexd{0.0, 1.0};
  CHECK(max_abs_diff(x * y, iz) < 1e-15);
}

TEST_CASE("tensor product layout") {
  const ComplexMatrix xx = tensor(pauli_x(), pauli_x());
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      CHECK(xx.at(r, c) == complexd{(r + c == 3) ? 1.0 : 0.0});
  const ComplexMatrix yy = tensor(pauli_y(), pauli_y());
  CHECK(yy.at(0, 3) == complexd{-1.0});
  CHECK(yy.at(1, 2) == complexd{1.0});
  CHECK(yy.at(2, 1) == complexd{1.0});
  CHECK(yy.at(3, 0) == complexd{-1.0});
}

TEST_CASE("eigenvalues of known matrices") {
  const auto x_eigs = hermitian_eigenvalues(pauli_x());
  CHECK(x_eigs[0] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(x_eigs[1] == doctest::Approx(1.0).epsilon(1e-14));

  // (X(x)X + Y(x)Y)/4 has spectrum {-1/2, 0, 0, 1/2}.
  ComplexMatrix m = tensor(pauli_x(), pauli_x());
  m += tensor(pauli_y(), pauli_y());
  m *= 0.25;
  const auto eigs = hermitian_eigenvalues(m);
  CHECK(eigs[0] == doctest::Approx(-0.5).epsilon(1e-13));
  CHECK(eigs[1] == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(eigs[2] == doctest::Approx(0.0).epsilon(1e-13));
  CHECK(eigs[3] == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("eigendecomposition round trip on random Hermitian matrices") {
  RngStream rng(derive_seed(7, "matrix-test"));
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = (trial % 2 == 0) ? 4 : 2;
    const ComplexMatrix m = random_hermitian(dim, rng);
    const HermitianEigen eig = hermitian_eigendecomposition(m);

    // Reconstruct V diag V^dagger and compare entrywise.
    ComplexMatrix d = ComplexMatrix::zero(dim);
    for (int i = 0; i < dim; ++i) d.at(i, i) = eig.values[i];
    const ComplexMatrix rebuilt = eig.vectors * d * eig.vectors.adjoint();
    CHECK(max_abs_diff(rebuilt, m) < 1e-10);

    // V unitary.
    CHECK(max_abs_diff(eig.vectors.adjoint() * eig.vectors, ComplexMatrix::identity(dim)) <
          1e-12);

    // Ascending order.
    for (int i = 1; i < dim; ++i) CHECK(eig.values[i] >= eig.values[i - 1]);
  }
}

TEST_CASE("non-Hermitian input is rejected") {
  ComplexMatrix m(2);
  m.at(0, 1) = 1.0;  // missing conjugate partner
  CHECK_THROWS_AS(hermitian_eigenvalues(m), std::invalid_argument);
  CHECK_THROWS_AS((void)(m + ComplexMatrix::identity(3)), std::invalid_argument);
}

}  // TEST_SUITE
