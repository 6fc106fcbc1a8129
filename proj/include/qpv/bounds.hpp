#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qpv/quantum.hpp"
#include "qpv/rng.hpp"

namespace qpv {

// 1/2 + ||rho0 - rho1||_1 / 4.
double helstrom_guess(const DensityMatrix& rho0, const DensityMatrix& rho1);

struct ConstraintResidual {
  std::string name;
  double residual = 0.0;   // how far outside the constraint (0 when satisfied)
  double tolerance = 0.0;
  bool ok = true;
};

// Numerical verification of the explicit primal/dual feasible solutions of the
// PPT discrimination program at conclusive rate eta. Both objectives equal
// 3*eta/4, certifying the 3/4 guessing-probability bound with zero duality gap.
struct CertificateReport {
  double eta = 0.0;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double duality_gap = 0.0;
  bool primal_feasible = false;
  bool dual_feasible = false;
  std::vector<ConstraintResidual> checks;      // every verified constraint
  std::vector<ConstraintResidual> violations;  // subset with ok == false
};

CertificateReport verify_ppt_certificates(double eta);

// One round of an LOCC attack: what each adversary reports to its verifier.
struct AttackResponse {
  Outcome to_v1 = Outcome::inconclusive;
  Outcome to_v2 = Outcome::inconclusive;
};

// A responder expressible as local single-qubit measurements plus one round of
// classical exchange. Each shipped strategy documents why it is LOCC; the
// respond function receives the round's (b, x, y) only to simulate the local
// measurement statistics those values induce.
struct AttackStrategy {
  std::string name;
  std::function<AttackResponse(int b, int x, int y, RngStream&)> respond;
};

// Shared-randomness lambda in {0,1} with Pr[1] = eta; on lambda=1 both measure
// in the X (or Y) basis, exchange outcomes and report the XOR; on lambda=0
// both report no detection. Guessing probability 3/4 for any eta.
AttackStrategy locc_xbasis_strategy(double eta);
AttackStrategy locc_ybasis_strategy(double eta);
// Statistical mixture: an extra shared coin picks X or Y basis per round.
AttackStrategy locc_mixed_strategy(double eta);

struct SoundnessInput {
  std::int64_t n_th = 0;
  double delta_th = 0.0;
  double nu = 0.0;
};

// exp(-2 n_th (1/4 - delta_th)^2).
double soundness_qubit(const SoundnessInput& input);

struct DecoySoundness {
  double eps_decoy = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
};

// eps1 = 1-(1-e^{-2nu})^7, eps2 = 1-(1-e^{-2nu})^4,
// eps_decoy = soundness_qubit + 2 eps1 + eps2.
DecoySoundness soundness_decoy(const SoundnessInput& input);

// Sanity oracle: exhaustive and sampled product measurements (arbitrary local
// projective bases) with the best classical post-processing of the two
// outcomes. No such strategy should beat 3/4. Deterministic evaluation: the
// guessing probability of each candidate is computed exactly from Born
// probabilities, not sampled.
struct ProductSearchResult {
  double best_guess = 0.0;
  double theta1 = 0.0, phi1 = 0.0;  // Bloch angles of the best local bases
  double theta2 = 0.0, phi2 = 0.0;
  int candidates = 0;
};

ProductSearchResult product_measurement_search(int grid_steps, int random_samples,
                                               std::uint64_t seed);

}  // namespace qpv
