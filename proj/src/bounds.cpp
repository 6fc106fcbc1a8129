#include "qpv/bounds.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qpv {

double helstrom_guess(const DensityMatrix& rho0, const DensityMatrix& rho1) {
  if (rho0.dim() != rho1.dim())
    throw std::invalid_argument("helstrom_guess: dimension mismatch");
  ComplexMatrix diff = rho0.matrix();
  diff -= rho1.matrix();
  return 0.5 + trace_norm(diff) / 4.0;
}

namespace {

void record(CertificateReport& report, std::string name, double residual, double tolerance) {
  ConstraintResidual c{std::move(name), residual, tolerance, residual <= tolerance};
  if (!c.ok) report.violations.push_back(c);
  report.checks.push_back(std::move(c));
}

void check_psd(CertificateReport& report, const std::string& name, const ComplexMatrix& m,
               double tolerance) {
  const auto c = is_psd(m, tolerance);
  // Residual is the amount by which the smallest eigenvalue dips below zero.
  record(report, name, std::max(0.0, -c.min_eigenvalue), tolerance);
}

}  // namespace

CertificateReport verify_ppt_certificates(double eta) {
  if (!(eta > 0.0 && eta <= 1.0))
    throw std::invalid_argument("verify_ppt_certificates: eta must be in (0, 1]");

  CertificateReport report;
  report.eta = eta;

  const auto [rho0, rho1] = parity_mixtures();
  const ComplexMatrix identity4 = ComplexMatrix::identity(4);

  // Primal feasible solution: Pi_0/Pi_1 act on the middle block with +-
  // off-diagonal couplings, Pi_empty = (1-eta) * I.
  const double h = eta / 2.0;
  const ComplexMatrix pi0 = ComplexMatrix::from_rows({{h, 0, 0, 0},
                                                      {0, h, h, 0},
                                                      {0, h, h, 0},
                                                      {0, 0, 0, h}});
  const ComplexMatrix pi1 = ComplexMatrix::from_rows({{h, 0, 0, 0},
                                                      {0, h, -h, 0},
                                                      {0, -h, h, 0},
                                                      {0, 0, 0, h}});
  const ComplexMatrix pi_empty = (1.0 - eta) * identity4;

  record(report, "primal: Pi_0 + Pi_1 + Pi_empty = I",
         max_abs_diff(pi0 + pi1 + pi_empty, identity4), tol::povm_completeness);
  record(report, "primal: Tr[rho_0 Pi_empty] = 1 - eta",
         std::abs((rho0.matrix() * pi_empty).trace().real() - (1.0 - eta)), tol::psd);
  record(report, "primal: Tr[rho_1 Pi_empty] = 1 - eta",
         std::abs((rho1.matrix() * pi_empty).trace().real() - (1.0 - eta)), tol::psd);
  check_psd(report, "primal: Pi_0 >= 0", pi0, tol::psd);
  check_psd(report, "primal: Pi_1 >= 0", pi1, tol::psd);
  check_psd(report, "primal: Pi_empty >= 0", pi_empty, tol::psd);
  check_psd(report, "primal: T_B(Pi_0) >= 0", partial_transpose(pi0), tol::psd);
  check_psd(report, "primal: T_B(Pi_1) >= 0", partial_transpose(pi1), tol::psd);
  check_psd(report, "primal: T_B(Pi_empty) >= 0", partial_transpose(pi_empty), tol::psd);

  report.primal_value = 0.5 * ((rho0.matrix() * pi0).trace().real() +
                               (rho1.matrix() * pi1).trace().real());

  // Dual feasible solution: Y = (3/16) I, gamma = 3/4, rank-one corner Q_0/Q_1,
  // Q_2 = 0. The Q_i enter the operator inequalities through T_B(Q_i),
  // recomputed exactly as displayed.
  const ComplexMatrix y = (3.0 / 16.0) * identity4;
  const double gamma = 0.75;
  const double k = 1.0 / 16.0;
  const ComplexMatrix q0 = ComplexMatrix::from_rows({{k, 0, 0, -k},
                                                     {0, 0, 0, 0},
                                                     {0, 0, 0, 0},
                                                     {-k, 0, 0, k}});
  const ComplexMatrix q1 = ComplexMatrix::from_rows({{k, 0, 0, k},
                                                     {0, 0, 0, 0},
                                                     {0, 0, 0, 0},
                                                     {k, 0, 0, k}});
  const ComplexMatrix q2 = ComplexMatrix::zero(4);

  check_psd(report, "dual: 2(Y - T_B(Q_0)) - rho_0 >= 0",
            2.0 * (y - partial_transpose(q0)) - rho0.matrix(), tol::psd);
  check_psd(report, "dual: 2(Y - T_B(Q_1)) - rho_1 >= 0",
            2.0 * (y - partial_transpose(q1)) - rho1.matrix(), tol::psd);
  check_psd(report, "dual: 4(Y - T_B(Q_2)) - gamma I >= 0",
            4.0 * (y - partial_transpose(q2)) - gamma * identity4, tol::psd);
  check_psd(report, "dual: Q_0 >= 0", q0, tol::psd);
  check_psd(report, "dual: Q_1 >= 0", q1, tol::psd);
  check_psd(report, "dual: Q_2 >= 0", q2, tol::psd);
  record(report, "dual: Y Hermitian", y.is_hermitian(tol::hermiticity) ? 0.0 : 1.0,
         tol::hermiticity);

  report.dual_value = y.trace().real() - (1.0 - eta) * gamma;
  report.duality_gap = report.dual_value - report.primal_value;

  bool primal_ok = true, dual_ok = true;
  for (const auto& c : report.checks) {
    if (c.name.rfind("primal", 0) == 0) primal_ok = primal_ok && c.ok;
    if (c.name.rfind("dual", 0) == 0) dual_ok = dual_ok && c.ok;
  }
  report.primal_feasible = primal_ok;
  report.dual_feasible = dual_ok;
  return report;
}

namespace {

void require_eta(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("attack strategy: eta must be in [0, 1]");
}

// Local measurement of omega_{b,bit} in the X basis: deterministic for the X
// family (b = 0), uniform for the Y family. Swapped roles for the Y basis.
int measure_local(int measured_basis, int state_basis, int bit, RngStream& rng) {
  return (state_basis == measured_basis) ? bit : rng.bit();
}

AttackResponse xor_report(int e1, int e2) {
  const Outcome z = ((e1 ^ e2) == 0) ? Outcome::zero : Outcome::one;
  return {z, z};
}

}  // namespace

AttackStrategy locc_xbasis_strategy(double eta) {
  require_eta(eta);
  AttackStrategy s;
  s.name = "locc-xbasis";
  s.respond = [eta](int b, int x, int y, RngStream& rng) -> AttackResponse {
    if (!rng.bernoulli(eta)) return {};  // lambda = 0: joint no-detection
    const int e1 = measure_local(0, b, x, rng);
    const int e2 = measure_local(0, b, y, rng);
    return xor_report(e1, e2);
  };
  return s;
}

AttackStrategy locc_ybasis_strategy(double eta) {
  require_eta(eta);
  AttackStrategy s;
  s.name = "locc-ybasis";
  s.respond = [eta](int b, int x, int y, RngStream& rng) -> AttackResponse {
    if (!rng.bernoulli(eta)) return {};
    const int e1 = measure_local(1, b, x, rng);
    const int e2 = measure_local(1, b, y, rng);
    return xor_report(e1, e2);
  };
  return s;
}

AttackStrategy locc_mixed_strategy(double eta) {
  require_eta(eta);
  AttackStrategy s;
  s.name = "locc-mixed-xy";
  s.respond = [eta](int b, int x, int y, RngStream& rng) -> AttackResponse {
    const int shared_basis = rng.bit();  // additional shared randomness
    if (!rng.bernoulli(eta)) return {};
    const int e1 = measure_local(shared_basis, b, x, rng);
    const int e2 = measure_local(shared_basis, b, y, rng);
    return xor_report(e1, e2);
  };
  return s;
}

double soundness_qubit(const SoundnessInput& input) {
  if (input.n_th < 1) throw std::invalid_argument("soundness_qubit: n_th must be >= 1");
  if (!(input.delta_th >= 0.0 && input.delta_th < 0.25))
    throw std::invalid_argument("soundness_qubit: delta_th must be in [0, 1/4)");
  const double beta = 0.25 - input.delta_th;
  return std::exp(-2.0 * static_cast<double>(input.n_th) * beta * beta);
}

DecoySoundness soundness_decoy(const SoundnessInput& input) {
  if (!(input.nu > 0.0)) throw std::invalid_argument("soundness_decoy: nu must be positive");
  const double base = 1.0 - std::exp(-2.0 * input.nu);
  DecoySoundness out;
  out.eps1 = 1.0 - std::pow(base, 7);
  out.eps2 = 1.0 - std::pow(base, 4);
  out.eps_decoy = soundness_qubit(input) + 2.0 * out.eps1 + out.eps2;
  return out;
}

namespace {

// Born probabilities of a projective measurement along Bloch direction
// (theta, phi) applied to omega_{b,bit}: p(outcome 0) = (1 + n . r)/2 with r
// the state's Bloch vector (+-x or +-y axis).
double prob_outcome0(double theta, double phi, int b, int bit) {
  const double nx = std::sin(theta) * std::cos(phi);
  const double ny = std::sin(theta) * std::sin(phi);
  const double sign = (bit == 0) ? 1.0 : -1.0;
  const double dot = (b == 0) ? sign * nx : sign * ny;
  return 0.5 * (1.0 + dot);
}

// Exact guessing probability of "measure along (t1,p1) x (t2,p2), then apply
// the best deterministic post-processing g(e1,e2) -> z". All 16 Boolean
// functions are scanned; conclusive on every round (eta = 1 is the worst case
// for the bound since the 3/4 value is eta-independent).
double best_product_guess(double t1, double p1, double t2, double p2) {
  double joint[2][2][8];  // p(e1,e2 | b,x,y)
  for (int b = 0; b < 2; ++b)
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) {
        const double q1 = prob_outcome0(t1, p1, b, x);
        const double q2 = prob_outcome0(t2, p2, b, y);
        const int ctx = (b << 2) | (x << 1) | y;
        joint[0][0][ctx] = q1 * q2;
        joint[0][1][ctx] = q1 * (1.0 - q2);
        joint[1][0][ctx] = (1.0 - q1) * q2;
        joint[1][1][ctx] = (1.0 - q1) * (1.0 - q2);
      }
  double best = 0.0;
  for (int g = 0; g < 16; ++g) {
    double win = 0.0;
    for (int ctx = 0; ctx < 8; ++ctx) {
      const int parity = ((ctx >> 1) & 1) ^ (ctx & 1);
      for (int e1 = 0; e1 < 2; ++e1)
        for (int e2 = 0; e2 < 2; ++e2) {
          const int z = (g >> (2 * e1 + e2)) & 1;
          if (z == parity) win += joint[e1][e2][ctx];
        }
    }
    best = std::max(best, win / 8.0);
  }
  return best;
}

}  // namespace

ProductSearchResult product_measurement_search(int grid_steps, int random_samples,
                                               std::uint64_t seed) {
  ProductSearchResult result;
  const double pi = std::numbers::pi;
  auto consider = [&](double t1, double p1, double t2, double p2) {
    const double g = best_product_guess(t1, p1, t2, p2);
    ++result.candidates;
    if (g > result.best_guess) result = {g, t1, p1, t2, p2, result.candidates};
  };
  // Known-tight axes first: both measure X, or both measure Y.
  consider(pi / 2.0, 0.0, pi / 2.0, 0.0);
  consider(pi / 2.0, pi / 2.0, pi / 2.0, pi / 2.0);
  for (int i = 0; i < grid_steps; ++i)
    for (int j = 0; j < grid_steps; ++j)
      for (int k = 0; k < grid_steps; ++k)
        for (int l = 0; l < grid_steps; ++l)
          consider(pi * (i + 0.5) / grid_steps, 2.0 * pi * j / grid_steps,
                   pi * (k + 0.5) / grid_steps, 2.0 * pi * l / grid_steps);
  RngStream rng(seed);
  for (int s = 0; s < random_samples; ++s) {
    const double t1 = std::acos(2.0 * rng.uniform() - 1.0);
    const double t2 = std::acos(2.0 * rng.uniform() - 1.0);
    consider(t1, 2.0 * pi * rng.uniform(), t2, 2.0 * pi * rng.uniform());
  }
  return result;
}

}  // namespace qpv
