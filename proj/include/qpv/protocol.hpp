#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qpv/bounds.hpp"
#include "qpv/decoy.hpp"
#include "qpv/optics.hpp"
#include "qpv/rng.hpp"

namespace qpv {

// Collinear 1-D geometry, light speed normalized to 1: sending a message from
// a to b takes |a - b|. Pulses are dispatched so both reach pos_claimed at the
// same instant; rounds are spaced 2*tau apart.
struct Geometry {
  double pos_v1 = 0.0;
  double pos_v2 = 2.0;
  double pos_claimed = 1.0;

  double tau() const { return pos_claimed - pos_v1; }
  void validate() const;

  static Geometry symmetric(double tau) { return {0.0, 2.0 * tau, tau}; }
};

// Where the responder's hardware sits. The honest prover measures jointly at
// the claimed position; an LOCC pair measures locally and exchanges one
// classical message; a single remote station measures both pulses jointly away
// from the claimed position.
struct ResponderPlacement {
  enum class Kind { prover_at_claim, locc_pair, single_remote };
  Kind kind = Kind::prover_at_claim;
  double position1 = 0.0;
  double position2 = 0.0;  // locc_pair only

  static ResponderPlacement at_claim(const Geometry& g) {
    return {Kind::prover_at_claim, g.pos_claimed, g.pos_claimed};
  }
  static ResponderPlacement pair(double e1, double e2) {
    return {Kind::locc_pair, e1, e2};
  }
  static ResponderPlacement remote(double pos) { return {Kind::single_remote, pos, pos}; }
};

// Light-cone feasibility: can the outcome reach both verifiers by t_i + 2*tau
// given the placement and one round of classical communication?
bool timing_check(const ResponderPlacement& placement, const Geometry& geometry);

struct Responder {
  std::string name;
  ResponderPlacement placement;
  std::function<AttackResponse(int b, int x, int y, RngStream&)> respond;
};

// Honest prover at the claimed position running the ideal single-photon BSM.
Responder honest_ideal_responder(const Geometry& geometry);
// Honest optics but every conclusive bit flipped; error rate ~1 (test fixture).
Responder honest_flipped_responder(const Geometry& geometry);
// LOCC adversary pair at (pos_e1, pos_e2) executing the given strategy.
Responder adversary_responder(const AttackStrategy& strategy, double pos_e1, double pos_e2);

struct RoundRecord {
  std::int64_t index = 0;
  int b = 0, x = 0, y = 0;
  std::optional<double> intensity_v1, intensity_v2;  // decoy mode only
  Outcome z = Outcome::inconclusive;
  bool arrived_in_time = true;
  bool outcomes_consistent = true;
};

enum class VerdictReason {
  timing_abort,
  inconsistent_outcomes,
  quota_fail,
  error_rate_fail,
  accept,
};

const char* to_string(VerdictReason reason);

struct VerdictStats {
  std::int64_t conclusive = 0;
  std::int64_t subset_size = 0;
  std::int64_t subset_errors = 0;
  double error_ratio = 0.0;
  std::int64_t s_lb = 0;  // decoy mode
  std::int64_t r_ub = 0;
};

struct Verdict {
  bool accept = false;  // accept iff reason == VerdictReason::accept
  VerdictReason reason = VerdictReason::quota_fail;
  VerdictStats stats;
};

enum class ProtocolMode { qubit, decoy };

struct ProtocolParams {
  std::int64_t rounds = 10000;  // m
  std::int64_t n_th = 4000;
  double delta_th = 0.01;
  ProtocolMode mode = ProtocolMode::qubit;
  std::optional<IntensityConfig> decoy_cfg;

  void validate() const;  // n_th <= rounds, delta_th < 1/4
};

// One preparation + measurement round: draws (b, x, y) from the verifiers'
// private stream, invokes the responder, evaluates timing and consistency.
RoundRecord run_round(std::int64_t index, const Responder& responder,
                      const Geometry& geometry, RngStream& rng);

struct QuotaResult {
  bool passed = false;
  std::int64_t conclusive = 0;
  std::vector<std::int64_t> subset;  // indices into the record vector, size n_th
};

// |Z| >= n_th and a uniform subset of size exactly n_th (without replacement).
QuotaResult quota_check(const std::vector<RoundRecord>& records, std::int64_t n_th,
                        RngStream& rng);

// Error counting over the quota subset; accept iff errors/n_th <= delta_th.
Verdict verdict_qubit(const std::vector<RoundRecord>& records, const ProtocolParams& params,
                      RngStream& rng);

// Decoy verdict from accumulated counts: quota on s_lb, then r_ub/s_lb.
Verdict verdict_decoy(const CountTable& counts, const ProtocolParams& params, double nu);

struct QubitRunResult {
  Verdict verdict;
  std::vector<RoundRecord> records;
};

QubitRunResult run_protocol_qubit(const ProtocolParams& params, const Responder& responder,
                                  const Geometry& geometry, RngStream& rng);

struct DecoyRunResult {
  Verdict verdict;
  CountTable counts;
  PhotonTruth truth;                     // ground truth by emitted photon numbers
  std::int64_t rounds_beyond_cutoff = 0; // forced inconclusive (recorded bias)
};

// Honest decoy run against the Fock backend; every round is tagged with its
// true (k, l) emission for coverage analysis.
DecoyRunResult run_protocol_decoy(const ProtocolParams& params, const IntensityConfig& cfg,
                                  const FockBsmTable& bsm, const Geometry& geometry, double nu,
                                  RngStream& rng,
                                  std::vector<RoundRecord>* transcript = nullptr);

// Line-oriented transcript: "index b x y g h z t c" with '-' for absent
// intensities; z in {0, 1, -}.
std::string transcript_line(const RoundRecord& record);
std::string to_transcript(const std::vector<RoundRecord>& records);
std::vector<RoundRecord> from_transcript(const std::string& text);

}  // namespace qpv
