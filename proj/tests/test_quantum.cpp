#include <doctest.h>

#include <array>

#include "qpv/quantum.hpp"
#include "qpv/rng.hpp"

using namespace qpv;

namespace {

ComplexMatrix random_hermitian4(RngStream& rng) {
  ComplexMatrix m(4);
  for (int r = 0; r < 4; ++r) {
    m.at(r, r) = 2.0 * rng.uniform() - 1.0;
    for (int c = r + 1; c < 4; ++c) {
      const complexd v{2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0};
      m.at(r, c) = v;
      m.at(c, r) = std::conj(v);
    }
  }
  return m;
}

}  // namespace

TEST_SUITE("quantum") {

TEST_CASE("bb84 state table") {
  // (0,0) -> (I+X)/2
  const ComplexMatrix w00 = bb84_state(0, 0).matrix();
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(std::abs(w00.at(r, c) - complexd{0.5}) < 1e-12);

  // (1,1) -> (I-Y)/2 = [[1/2, i/2], [-i/2, 1/2]]
  const ComplexMatrix w11 = bb84_state(1, 1).matrix();
  CHECK(std::abs(w11.at(0, 0) - complexd{0.5}) < 1e-12);
  CHECK(std::abs(w11.at(0, 1) - complexd{0.0, 0.5}) < 1e-12);
  CHECK(std::abs(w11.at(1, 0) - complexd{0.0, -0.5}) < 1e-12);
  CHECK(std::abs(w11.at(1, 1) - complexd{0.5}) < 1e-12);

  CHECK_THROWS_AS(bb84_state(2, 0), std::invalid_argument);
  CHECK_THROWS_AS(bb84_state(0, -1), std::invalid_argument);
}

TEST_CASE("bb84 states are projectors with the right overlaps") {
  for (int basis = 0; basis < 2; ++basis)
    for (int bit = 0; bit < 2; ++bit) {
      const ComplexMatrix w = bb84_state(basis, bit).matrix();
      CHECK(std::abs(w.trace() - complexd{1.0}) < 1e-12);
      CHECK(max_abs_diff(w * w, w) < 1e-12);  // pure
    }
  // Same basis, opposite bits: orthogonal.
  for (int basis = 0; basis < 2; ++basis) {
    const auto a = bb84_state(basis, 0).matrix();
    const auto b = bb84_state(basis, 1).matrix();
    CHECK(std::abs((a * b).trace()) < 1e-12);
  }
  // Cross-basis overlap Tr[w w'] = 1/2.
  for (int b1 : {0, 1})
    for (int b2 : {0, 1})
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
          if (b1 == b2) continue;
          const auto a = bb84_state(b1, x).matrix();
          const auto b = bb84_state(b2, y).matrix();
          CHECK(std::abs((a * b).trace() - complexd{0.5}) < 1e-12);
        }
}

TEST_CASE("parity mixtures") {
  const auto [rho0, rho1] = parity_mixtures();
  CHECK(std::abs(rho0.matrix().trace() - complexd{1.0}) < 1e-12);
  CHECK(std::abs(rho1.matrix().trace() - complexd{1.0}) < 1e-12);
  CHECK(is_psd(rho0.matrix()).psd);
  CHECK(is_psd(rho1.matrix()).psd);

  // rho0 - rho1 = (X(x)X + Y(x)Y)/4, by direct matrix arithmetic.
  ComplexMatrix expected = tensor(pauli_x(), pauli_x());
  expected += tensor(pauli_y(), pauli_y());
  expected *= 0.25;
  ComplexMatrix diff = rho0.matrix();
  diff -= rho1.matrix();
  CHECK(max_abs_diff(diff, expected) < 1e-12);
}

TEST_CASE("partial transpose") {
  const ComplexMatrix id = ComplexMatrix::identity(4);
  CHECK(max_abs_diff(partial_transpose(id), id) == doctest::Approx(0.0));

  RngStream rng(derive_seed(11, "pt-test"));
  for (int trial = 0; trial < 20; ++trial) {
    const ComplexMatrix m = random_hermitian4(rng);
    const ComplexMatrix pt = partial_transpose(m);
    CHECK(max_abs_diff(partial_transpose(pt), m) == doctest::Approx(0.0));  // involution
    CHECK(std::abs(pt.trace() - m.trace()) < 1e-12);                        // trace preserved
    CHECK(pt.is_hermitian(1e-12));                                          // hermiticity preserved
  }

  CHECK_THROWS_AS(partial_transpose(ComplexMatrix::identity(2)), std::invalid_argument);

  // Appendix primal Pi~_0 at eta = 1: partial transpose has spectrum {0, 1/2, 1/2, 1}.
  const ComplexMatrix pi0 = ComplexMatrix::from_rows({{0.5, 0, 0, 0},
                                                      {0, 0.5, 0.5, 0},
                                                      {0, 0.5, 0.5, 0},
                                                      {0, 0, 0, 0.5}});
  const auto eigs = hermitian_eigenvalues(partial_transpose(pi0));
  CHECK(eigs[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eigs[1] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eigs[2] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(eigs[3] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(is_psd(partial_transpose(pi0)).psd);
}

TEST_CASE("is_psd") {
  const auto ok = is_psd(ComplexMatrix::identity(3));
  CHECK(ok.psd);
  CHECK(ok.min_eigenvalue == doctest::Approx(1.0));

  const ComplexMatrix neg = ComplexMatrix::from_rows({{1.0, 0.0}, {0.0, -0.5}});
  const auto bad = is_psd(neg);
  CHECK_FALSE(bad.psd);
  CHECK(bad.min_eigenvalue == doctest::Approx(-0.5));

  const auto [rho0, rho1] = parity_mixtures();
  ComplexMatrix diff = rho0.matrix();
  diff -= rho1.matrix();
  const auto check = is_psd(diff);
  CHECK_FALSE(check.psd);
  CHECK(check.min_eigenvalue == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("trace norm") {
  const auto [rho0, rho1] = parity_mixtures();
  ComplexMatrix diff = rho0.matrix();
  diff -= rho1.matrix();
  CHECK(std::abs(trace_norm(diff) - 1.0) < 1e-12);  // Helstrom value 3/4 via 1/2 + 1/4

  CHECK(trace_norm(ComplexMatrix::zero(4)) == doctest::Approx(0.0));
  CHECK(std::abs(trace_norm(rho0.matrix()) - 1.0) < 1e-12);  // any state has norm 1
  CHECK(std::abs(trace_norm(bb84_state(1, 0).matrix()) - 1.0) < 1e-12);
}

TEST_CASE("validated constructors") {
  ComplexMatrix not_state = ComplexMatrix::identity(2);  // trace 2
  CHECK_THROWS_AS(DensityMatrix::state(not_state), std::invalid_argument);

  ComplexMatrix negative = ComplexMatrix::from_rows({{1.5, 0.0}, {0.0, -0.5}});
  CHECK_THROWS_AS(DensityMatrix::state(negative), std::invalid_argument);
  CHECK_NOTHROW(DensityMatrix::hermitian(negative));
  CHECK_THROWS_AS(MeasurementOperator(negative, Outcome::zero), std::invalid_argument);

  // A complete POVM: the two X projectors.
  const MeasurementOperator p0(bb84_state(0, 0).matrix(), Outcome::zero);
  const MeasurementOperator p1(bb84_state(0, 1).matrix(), Outcome::one);
  const std::array<MeasurementOperator, 2> povm{p0, p1};
  CHECK(is_complete_povm(povm));
  const std::array<MeasurementOperator, 1> partial{p0};
  CHECK_FALSE(is_complete_povm(partial));
}

}  // TEST_SUITE
