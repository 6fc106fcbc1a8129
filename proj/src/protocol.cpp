#include "qpv/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qpv {

void Geometry::validate() const {
  if (!(pos_v1 < pos_claimed && pos_claimed < pos_v2))
    throw std::invalid_argument("Geometry: pos_claimed must lie strictly between the verifiers");
}

namespace {

// Dispatch times: pulse j leaves verifier j at t_i + (tau_star - tau_j) so both
// pulses reach pos_claimed at t_i + tau_star; verifier j expects the reply by
// its own round-trip deadline t_i + tau_star + tau_j.
struct TimingFrame {
  double send1, send2;      // relative to t_i
  double deadline1, deadline2;
};

TimingFrame timing_frame(const Geometry& g) {
  const double tau1 = g.pos_claimed - g.pos_v1;
  const double tau2 = g.pos_v2 - g.pos_claimed;
  const double tau_star = std::max(tau1, tau2);
  return {tau_star - tau1, tau_star - tau2, tau_star + tau1, tau_star + tau2};
}

constexpr double kTimingSlack = 1e-9;

}  // namespace

bool timing_check(const ResponderPlacement& placement, const Geometry& geometry) {
  geometry.validate();
  const TimingFrame frame = timing_frame(geometry);
  const double v1 = geometry.pos_v1, v2 = geometry.pos_v2;

  switch (placement.kind) {
    case ResponderPlacement::Kind::prover_at_claim:
      return true;
    case ResponderPlacement::Kind::single_remote: {
      const double p = placement.position1;
      const double ready = std::max(frame.send1 + std::abs(p - v1),
                                    frame.send2 + std::abs(v2 - p));
      return ready + std::abs(p - v1) <= frame.deadline1 + kTimingSlack &&
             ready + std::abs(v2 - p) <= frame.deadline2 + kTimingSlack;
    }
    case ResponderPlacement::Kind::locc_pair: {
      // E1 intercepts V1's pulse, E2 intercepts V2's; one simultaneous
      // classical exchange, then each reports to its verifier.
      const double p1 = placement.position1;
      const double p2 = placement.position2;
      const double m1 = frame.send1 + std::abs(p1 - v1);
      const double m2 = frame.send2 + std::abs(v2 - p2);
      const double hop = std::abs(p2 - p1);
      const double report1 = std::max(m1, m2 + hop) + std::abs(p1 - v1);
      const double report2 = std::max(m2, m1 + hop) + std::abs(v2 - p2);
      return report1 <= frame.deadline1 + kTimingSlack &&
             report2 <= frame.deadline2 + kTimingSlack;
    }
  }
  return false;
}

Responder honest_ideal_responder(const Geometry& geometry) {
  Responder r;
  r.name = "honest-ideal";
  r.placement = ResponderPlacement::at_claim(geometry);
  r.respond = [](int b, int x, int y, RngStream& rng) -> AttackResponse {
    const Outcome z = ideal_bsm_single_photon(b, x, y, rng).outcome();
    return {z, z};
  };
  return r;
}

Responder honest_flipped_responder(const Geometry& geometry) {
  Responder r;
  r.name = "honest-flipped";
  r.placement = ResponderPlacement::at_claim(geometry);
  r.respond = [](int b, int x, int y, RngStream& rng) -> AttackResponse {
    Outcome z = ideal_bsm_single_photon(b, x, y, rng).outcome();
    if (z == Outcome::zero) z = Outcome::one;
    else if (z == Outcome::one) z = Outcome::zero;
    return {z, z};
  };
  return r;
}

Responder adversary_responder(const AttackStrategy& strategy, double pos_e1, double pos_e2) {
  Responder r;
  r.name = strategy.name;
  r.placement = ResponderPlacement::pair(pos_e1, pos_e2);
  r.respond = strategy.respond;
  return r;
}

void ProtocolParams::validate() const {
  if (rounds < 1) throw std::invalid_argument("ProtocolParams: rounds must be >= 1");
  if (n_th < 1 || n_th > rounds)
    throw std::invalid_argument("ProtocolParams: requires 1 <= n_th <= rounds");
  if (!(delta_th >= 0.0 && delta_th < 0.25))
    throw std::invalid_argument("ProtocolParams: requires delta_th < 1/4");
  if (mode == ProtocolMode::decoy) {
    if (!decoy_cfg) throw std::invalid_argument("ProtocolParams: decoy mode needs intensities");
    decoy_cfg->validate();
  }
}

const char* to_string(VerdictReason reason) {
  switch (reason) {
    case VerdictReason::timing_abort: return "timing-abort";
    case VerdictReason::inconsistent_outcomes: return "inconsistent-outcomes";
    case VerdictReason::quota_fail: return "quota-fail";
    case VerdictReason::error_rate_fail: return "error-rate-fail";
    case VerdictReason::accept: return "accept";
  }
  return "unknown";
}

namespace {

void check_placement(const ResponderPlacement& placement, const Geometry& g) {
  const auto inside = [&](double p) { return p >= g.pos_v1 && p <= g.pos_v2; };
  if (!inside(placement.position1) ||
      (placement.kind == ResponderPlacement::Kind::locc_pair && !inside(placement.position2)))
    throw std::invalid_argument("run_round: responder positioned outside [pos_v1, pos_v2]");
}

}  // namespace

RoundRecord run_round(std::int64_t index, const Responder& responder, const Geometry& geometry,
                      RngStream& rng) {
  check_placement(responder.placement, geometry);
  RoundRecord record;
  record.index = index;
  record.b = rng.bit();  // shared private channel
  record.x = rng.bit();
  record.y = rng.bit();
  const AttackResponse response = responder.respond(record.b, record.x, record.y, rng);
  record.z = response.to_v1;
  record.outcomes_consistent = response.to_v1 == response.to_v2;
  record.arrived_in_time = timing_check(responder.placement, geometry);
  return record;
}

QuotaResult quota_check(const std::vector<RoundRecord>& records, std::int64_t n_th,
                        RngStream& rng) {
  QuotaResult result;
  std::vector<std::int64_t> conclusive;
  conclusive.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].z != Outcome::inconclusive) conclusive.push_back(static_cast<std::int64_t>(i));
  result.conclusive = static_cast<std::int64_t>(conclusive.size());
  if (result.conclusive < n_th) return result;

  // Partial Fisher-Yates: uniform subset of size n_th without replacement.
  for (std::int64_t i = 0; i < n_th; ++i) {
    const std::int64_t j = i + static_cast<std::int64_t>(rng.below(conclusive.size() - i));
    std::swap(conclusive[i], conclusive[j]);
  }
  conclusive.resize(n_th);
  result.subset = std::move(conclusive);
  result.passed = true;
  return result;
}

Verdict verdict_qubit(const std::vector<RoundRecord>& records, const ProtocolParams& params,
                      RngStream& rng) {
  params.validate();
  Verdict verdict;

  for (const auto& record : records) {
    if (!record.arrived_in_time) {
      verdict.reason = VerdictReason::timing_abort;
      return verdict;
    }
    if (!record.outcomes_consistent) {
      verdict.reason = VerdictReason::inconsistent_outcomes;
      return verdict;
    }
  }

  const QuotaResult quota = quota_check(records, params.n_th, rng);
  verdict.stats.conclusive = quota.conclusive;
  if (!quota.passed) {
    verdict.reason = VerdictReason::quota_fail;
    return verdict;
  }

  std::int64_t errors = 0;
  for (std::int64_t idx : quota.subset) {
    const RoundRecord& record = records[static_cast<std::size_t>(idx)];
    const int bit = record.z == Outcome::one ? 1 : 0;
    if (bit != (record.x ^ record.y)) ++errors;
  }
  verdict.stats.subset_size = params.n_th;
  verdict.stats.subset_errors = errors;
  // The error count is taken over the n_th-element subset, so the Bernoulli
  // experiment of the soundness proof has exactly n_th trials.
  verdict.stats.error_ratio =
      static_cast<double>(errors) / static_cast<double>(params.n_th);
  if (verdict.stats.error_ratio <= params.delta_th) {
    verdict.accept = true;
    verdict.reason = VerdictReason::accept;
  } else {
    verdict.reason = VerdictReason::error_rate_fail;
  }
  return verdict;
}

Verdict verdict_decoy(const CountTable& counts, const ProtocolParams& params, double nu) {
  params.validate();
  if (params.mode != ProtocolMode::decoy)
    throw std::invalid_argument("verdict_decoy: params not in decoy mode");
  const IntensityConfig& cfg = *params.decoy_cfg;

  Verdict verdict;
  const S11Estimate s = estimate_s11_lb(counts, cfg, nu);
  verdict.stats.conclusive = counts.n_total();
  verdict.stats.s_lb = s.s_lb;
  if (s.s_lb < params.n_th) {
    verdict.reason = VerdictReason::quota_fail;
    return verdict;
  }
  const R11Estimate r = estimate_r11_ub(counts, s.s_lb, cfg, nu);
  verdict.stats.r_ub = r.r_ub;
  verdict.stats.error_ratio =
      static_cast<double>(r.r_ub) / static_cast<double>(s.s_lb);
  if (verdict.stats.error_ratio <= params.delta_th) {
    verdict.accept = true;
    verdict.reason = VerdictReason::accept;
  } else {
    verdict.reason = VerdictReason::error_rate_fail;
  }
  return verdict;
}

QubitRunResult run_protocol_qubit(const ProtocolParams& params, const Responder& responder,
                                  const Geometry& geometry, RngStream& rng) {
  params.validate();
  geometry.validate();
  QubitRunResult result;
  result.records.reserve(static_cast<std::size_t>(params.rounds));
  // Rounds are strictly sequential: inputs for round i+1 are drawn only after
  // round i is recorded (t_{i+1} - t_i = 2 tau).
  for (std::int64_t i = 1; i <= params.rounds; ++i) {
    RoundRecord record = run_round(i, responder, geometry, rng);
    const bool abort_timing = !record.arrived_in_time;
    const bool abort_consistency = !record.outcomes_consistent;
    result.records.push_back(std::move(record));
    if (abort_timing) {
      result.verdict.reason = VerdictReason::timing_abort;
      return result;
    }
    if (abort_consistency) {
      result.verdict.reason = VerdictReason::inconsistent_outcomes;
      return result;
    }
  }
  result.verdict = verdict_qubit(result.records, params, rng);
  return result;
}

DecoyRunResult run_protocol_decoy(const ProtocolParams& params, const IntensityConfig& cfg,
                                  const FockBsmTable& bsm, const Geometry& geometry, double nu,
                                  RngStream& rng, std::vector<RoundRecord>* transcript) {
  ProtocolParams local = params;
  local.mode = ProtocolMode::decoy;
  if (!local.decoy_cfg) local.decoy_cfg = cfg;
  local.validate();
  geometry.validate();

  DecoyRunResult result{Verdict{}, CountTable{}, PhotonTruth(bsm.cutoff()), 0};
  const std::array<double, 2> intensity_cdf = {cfg.p[0], cfg.p[0] + cfg.p[1]};
  const std::array<double, 3> exp_neg_mu = {std::exp(-cfg.mu[0]), std::exp(-cfg.mu[1]),
                                            std::exp(-cfg.mu[2])};
  // Inversion sampling with the exp(-mu) factors hoisted out of the round loop.
  auto sample_intensity = [&](double roll) {
    return roll < intensity_cdf[0] ? 0 : (roll < intensity_cdf[1] ? 1 : 2);
  };
  auto sample_photons = [&](int idx, double roll) {
    double p = exp_neg_mu[idx];
    double cum = p;
    int n = 0;
    while (roll >= cum && n < 1000) {
      ++n;
      p *= cfg.mu[idx] / n;
      cum += p;
    }
    return n;
  };

  for (std::int64_t i = 1; i <= local.rounds; ++i) {
    const std::uint64_t word = rng.next_u64();
    const int b = static_cast<int>(word & 1u);
    const int x = static_cast<int>((word >> 1) & 1u);
    const int y = static_cast<int>((word >> 2) & 1u);
    const int u = sample_intensity(rng.uniform());
    const int v = sample_intensity(rng.uniform());
    const int k = sample_photons(u, rng.uniform());
    const int l = sample_photons(v, rng.uniform());

    Outcome z = Outcome::inconclusive;
    if (k + l > bsm.cutoff()) {
      // Poisson tail above the Fock cutoff is folded into no-detection; the
      // count is reported so the bias stays auditable.
      ++result.rounds_beyond_cutoff;
    } else {
      z = bsm.distribution(b, x, y, k, l).sample_outcome(rng);
    }

    bool error = false;
    if (z != Outcome::inconclusive) {
      const int bit = z == Outcome::one ? 1 : 0;
      error = bit != (x ^ y);
      result.counts.add(u, v, error);
      result.truth.add(k, l, error);
    }
    if (transcript) {
      RoundRecord record;
      record.index = i;
      record.b = b;
      record.x = x;
      record.y = y;
      record.intensity_v1 = cfg.mu[u];
      record.intensity_v2 = cfg.mu[v];
      record.z = z;
      transcript->push_back(record);
    }
  }

  result.verdict = verdict_decoy(result.counts, local, nu);
  return result;
}

std::string transcript_line(const RoundRecord& record) {
  std::ostringstream out;
  out.precision(17);
  out << record.index << ' ' << record.b << ' ' << record.x << ' ' << record.y << ' ';
  if (record.intensity_v1) out << *record.intensity_v1; else out << '-';
  out << ' ';
  if (record.intensity_v2) out << *record.intensity_v2; else out << '-';
  out << ' ';
  switch (record.z) {
    case Outcome::zero: out << '0'; break;
    case Outcome::one: out << '1'; break;
    case Outcome::inconclusive: out << '-'; break;
  }
  out << ' ' << (record.arrived_in_time ? 1 : 0) << ' ' << (record.outcomes_consistent ? 1 : 0);
  return out.str();
}

std::string to_transcript(const std::vector<RoundRecord>& records) {
  std::string out;
  for (const auto& record : records) {
    out += transcript_line(record);
    out += '\n';
  }
  return out;
}

std::vector<RoundRecord> from_transcript(const std::string& text) {
  std::vector<RoundRecord> records;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    RoundRecord record;
    std::string g, h, z;
    int t = 1, c = 1;
    if (!(fields >> record.index >> record.b >> record.x >> record.y >> g >> h >> z >> t >> c))
      throw std::invalid_argument("from_transcript: malformed line: " + line);
    if (g != "-") record.intensity_v1 = std::stod(g);
    if (h != "-") record.intensity_v2 = std::stod(h);
    if (z == "0") record.z = Outcome::zero;
    else if (z == "1") record.z = Outcome::one;
    else if (z == "-") record.z = Outcome::inconclusive;
    else throw std::invalid_argument("from_transcript: bad outcome: " + z);
    record.arrived_in_time = t != 0;
    record.outcomes_consistent = c != 0;
    records.push_back(record);
  }
  return records;
}

}  // namespace qpv
