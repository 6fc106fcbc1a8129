#include <doctest.h>

#include <cmath>
#include <set>

#include "qpv/protocol.hpp"

using namespace qpv;

namespace {

ProtocolParams qubit_params(std::int64_t rounds, std::int64_t n_th, double delta_th) {
  ProtocolParams p;
  p.rounds = rounds;
  p.n_th = n_th;
  p.delta_th = delta_th;
  p.mode = ProtocolMode::qubit;
  return p;
}

std::vector<RoundRecord> honest_records(std::int64_t rounds, std::uint64_t seed) {
  const Geometry g = Geometry::symmetric(1.0);
  const Responder honest = honest_ideal_responder(g);
  RngStream rng(seed);
  std::vector<RoundRecord> records;
  records.reserve(rounds);
  for (std::int64_t i = 1; i <= rounds; ++i) records.push_back(run_round(i, honest, g, rng));
  return records;
}

}  // namespace

TEST_SUITE("protocol") {

TEST_CASE("geometry") {
  CHECK_NOTHROW(Geometry::symmetric(5.0).validate());
  CHECK(Geometry::symmetric(5.0).tau() == doctest::Approx(5.0));
  Geometry bad{0.0, 2.0, 2.5};  // claimed position outside the segment
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("timing feasibility on the line") {
  const Geometry g = Geometry::symmetric(1.0);

  CHECK(timing_check(ResponderPlacement::at_claim(g), g));

  // A pair straddling the claimed position, one classical exchange: feasible
  // (the exchange plus report exactly fills the 2*tau budget).
  CHECK(timing_check(ResponderPlacement::pair(0.3, 1.7), g));
  CHECK(timing_check(ResponderPlacement::pair(0.05, 1.95), g));
  CHECK(timing_check(ResponderPlacement::pair(0.3, 1.1), g));
  // Both adversaries on one side: the farther verifier cannot be answered in
  // time (its pulse must be intercepted and the answer walked all the way back).
  CHECK_FALSE(timing_check(ResponderPlacement::pair(0.2, 0.7), g));

  // A single station away from the claimed position cannot serve both
  // verifiers in time; at the claimed position it can.
  CHECK_FALSE(timing_check(ResponderPlacement::remote(0.4), g));
  CHECK_FALSE(timing_check(ResponderPlacement::remote(1.8), g));
  CHECK(timing_check(ResponderPlacement::remote(1.0), g));
}

TEST_CASE("run_round draws and flags") {
  const Geometry g = Geometry::symmetric(1.0);
  const Responder honest = honest_ideal_responder(g);
  RngStream rng(derive_seed(21, "round"));

  std::int64_t same_plus = 0, same_incl = 0, same_total = 0;
  std::int64_t diff_minus = 0, diff_incl = 0, diff_total = 0;
  for (std::int64_t i = 1; i <= 40000; ++i) {
    const RoundRecord record = run_round(i, honest, g, rng);
    CHECK(record.arrived_in_time);
    CHECK(record.outcomes_consistent);
    CHECK_FALSE(record.intensity_v1.has_value());
    if (record.x == record.y) {
      ++same_total;
      if (record.z == Outcome::zero) ++same_plus;
      if (record.z == Outcome::inconclusive) ++same_incl;
      CHECK(record.z != Outcome::one);  // x = y never reports Psi-
    } else {
      ++diff_total;
      if (record.z == Outcome::one) ++diff_minus;
      if (record.z == Outcome::inconclusive) ++diff_incl;
      CHECK(record.z != Outcome::zero);
    }
  }
  const double sigma_same = 5.0 * std::sqrt(0.25 / same_total);
  CHECK(std::abs(static_cast<double>(same_plus) / same_total - 0.5) < sigma_same);
  CHECK(std::abs(static_cast<double>(same_incl) / same_total - 0.5) < sigma_same);
  const double sigma_diff = 5.0 * std::sqrt(0.25 / diff_total);
  CHECK(std::abs(static_cast<double>(diff_minus) / diff_total - 0.5) < sigma_diff);
  CHECK(std::abs(static_cast<double>(diff_incl) / diff_total - 0.5) < sigma_diff);

  // Positions outside the verifier segment are rejected.
  Responder outside = honest;
  outside.placement = ResponderPlacement::remote(2.5);
  CHECK_THROWS_AS(run_round(1, outside, g, rng), std::invalid_argument);
}

TEST_CASE("quota check") {
  RngStream rng(derive_seed(22, "quota"));

  // All inconclusive: abort.
  std::vector<RoundRecord> silent(100);
  for (std::int64_t i = 0; i < 100; ++i) silent[i].index = i + 1;
  const QuotaResult fail = quota_check(silent, 10, rng);
  CHECK_FALSE(fail.passed);
  CHECK(fail.conclusive == 0);

  // |Z| == n_th: the subset is all of Z.
  std::vector<RoundRecord> exact(10);
  for (std::int64_t i = 0; i < 10; ++i) {
    exact[i].index = i + 1;
    exact[i].z = (i < 4) ? Outcome::zero : Outcome::inconclusive;
  }
  const QuotaResult all = quota_check(exact, 4, rng);
  CHECK(all.passed);
  const std::set<std::int64_t> subset(all.subset.begin(), all.subset.end());
  CHECK(subset == std::set<std::int64_t>{0, 1, 2, 3});

  // Honest statistics comfortably pass n_th = 0.4 m (binomial argument).
  const auto records = honest_records(10000, derive_seed(22, "quota-honest"));
  const QuotaResult big = quota_check(records, 4000, rng);
  CHECK(big.passed);
  CHECK(big.subset.size() == 4000);
  std::set<std::int64_t> unique(big.subset.begin(), big.subset.end());
  CHECK(unique.size() == 4000);  // sampled without replacement
  for (std::int64_t idx : big.subset)
    CHECK(records[static_cast<std::size_t>(idx)].z != Outcome::inconclusive);
}

TEST_CASE("qubit verdicts") {
  const Geometry g = Geometry::symmetric(1.0);
  RngStream rng(derive_seed(23, "verdict"));

  // Honest: accept with zero errors.
  const ProtocolParams params = qubit_params(2000, 800, 0.01);
  const QubitRunResult honest =
      run_protocol_qubit(params, honest_ideal_responder(g), g, rng);
  CHECK(honest.verdict.accept);
  CHECK(honest.verdict.reason == VerdictReason::accept);
  CHECK(honest.verdict.stats.subset_errors == 0);
  CHECK(honest.verdict.stats.subset_size == 800);

  // Flipped honest responder: error rate ~1, always rejected.
  const QubitRunResult flipped =
      run_protocol_qubit(params, honest_flipped_responder(g), g, rng);
  CHECK_FALSE(flipped.verdict.accept);
  CHECK(flipped.verdict.reason == VerdictReason::error_rate_fail);
  CHECK(flipped.verdict.stats.error_ratio > 0.9);

  // X-basis attack at n_th = 1000, delta_th = 0.1: rejected every time (the
  // bound puts acceptance below 2.9e-20).
  const ProtocolParams strict = qubit_params(1500, 1000, 0.1);
  const Responder attacker = adversary_responder(locc_xbasis_strategy(1.0), 0.2, 1.8);
  for (int trial = 0; trial < 30; ++trial) {
    const QubitRunResult run = run_protocol_qubit(strict, attacker, g, rng);
    CHECK_FALSE(run.verdict.accept);
    CHECK(run.verdict.reason == VerdictReason::error_rate_fail);
  }

  // Inconsistent reports abort the whole run immediately.
  Responder inconsistent = honest_ideal_responder(g);
  inconsistent.respond = [](int, int, int, RngStream&) {
    return AttackResponse{Outcome::zero, Outcome::one};
  };
  const QubitRunResult aborted = run_protocol_qubit(params, inconsistent, g, rng);
  CHECK_FALSE(aborted.verdict.accept);
  CHECK(aborted.verdict.reason == VerdictReason::inconsistent_outcomes);
  CHECK(aborted.records.size() == 1);

  // A single remote station misses the light-cone deadline: timing abort.
  Responder remote = honest_ideal_responder(g);
  remote.placement = ResponderPlacement::remote(0.4);
  const QubitRunResult late = run_protocol_qubit(params, remote, g, rng);
  CHECK(late.verdict.reason == VerdictReason::timing_abort);
  CHECK(late.records.size() == 1);
}

TEST_CASE("every run yields exactly one verdict with a reason") {
  const Geometry g = Geometry::symmetric(1.0);
  RngStream rng(derive_seed(29, "total"));
  const ProtocolParams tight = qubit_params(50, 40, 0.01);
  // Mix of responders; every verdict must carry a consistent accept/reason pair.
  const Responder responders[] = {honest_ideal_responder(g), honest_flipped_responder(g),
                                  adversary_responder(locc_xbasis_strategy(0.3), 0.5, 1.5)};
  for (const Responder& responder : responders) {
    for (int trial = 0; trial < 20; ++trial) {
      const QubitRunResult run = run_protocol_qubit(tight, responder, g, rng);
      CHECK(run.verdict.accept == (run.verdict.reason == VerdictReason::accept));
    }
  }
}

TEST_CASE("sequential round indices") {
  const auto records = honest_records(500, derive_seed(31, "seq"));
  for (std::size_t i = 0; i < records.size(); ++i)
    CHECK(records[i].index == static_cast<std::int64_t>(i + 1));
}

TEST_CASE("decoy verdict paths") {
  ProtocolParams params;
  params.rounds = 1000000;
  params.n_th = 100;
  params.delta_th = 0.24;
  params.mode = ProtocolMode::decoy;
  IntensityConfig cfg;
  cfg.mu = {0.3, 0.1, 0.001};
  cfg.p = {0.5, 0.25, 0.25};
  params.decoy_cfg = cfg;

  CountTable zero;
  const Verdict quota = verdict_decoy(zero, params, 10.0);
  CHECK_FALSE(quota.accept);
  CHECK(quota.reason == VerdictReason::quota_fail);

  ProtocolParams bad = params;
  bad.mode = ProtocolMode::qubit;
  CHECK_THROWS_AS(verdict_decoy(zero, bad, 10.0), std::invalid_argument);
}

TEST_CASE("decoy verdicts on honest expected statistics across the loss range") {
  // Expected counts from the deterministic gain model, fed to the verdict:
  // comfortably below the cutoff the verifiers agree; far beyond it they do not.
  IntensityConfig cfg;
  cfg.mu = {0.2, 0.105, 0.0};
  cfg.p = {0.3, 0.35, 0.35};
  const ChannelModel base;
  auto expected_table = [&](double loss_db, double pulses) {
    const ChannelModel at = base.with_overall_loss_db(loss_db);
    CountTable counts;
    for (int u = 0; u < 3; ++u)
      for (int v = 0; v < 3; ++v) {
        const GainError ge = expected_gain_error(cfg.mu[u], cfg.mu[v], at);
        counts.detections[u][v] =
            static_cast<std::int64_t>(std::nearbyint(pulses * cfg.p[u] * cfg.p[v] * ge.gain));
        counts.errors[u][v] = static_cast<std::int64_t>(
            std::nearbyint(pulses * cfg.p[u] * cfg.p[v] * ge.gain * ge.error_rate));
      }
    return counts;
  };

  ProtocolParams params;
  params.rounds = 10000000000000;
  params.n_th = 1000;
  params.delta_th = 0.24;
  params.mode = ProtocolMode::decoy;
  params.decoy_cfg = cfg;

  const Verdict low_loss = verdict_decoy(expected_table(20.0, 1e12), params, 10.0);
  CHECK(low_loss.accept);
  CHECK(low_loss.stats.error_ratio < 0.25);

  const Verdict high_loss = verdict_decoy(expected_table(55.0, 1e13), params, 10.0);
  CHECK_FALSE(high_loss.accept);
  if (high_loss.reason == VerdictReason::error_rate_fail)
    CHECK(high_loss.stats.error_ratio > 0.25);
}

TEST_CASE("transcript round trip") {
  const Geometry g = Geometry::symmetric(1.0);
  RngStream rng(derive_seed(37, "transcript"));

  auto records = honest_records(50, derive_seed(37, "transcript-records"));
  records[7].z = Outcome::one;  // ensure all three outcome symbols appear
  records[9].z = Outcome::inconclusive;
  records[3].intensity_v1 = 0.3;  // decoy-style lines mixed in
  records[3].intensity_v2 = 0.001;

  const std::string text = to_transcript(records);
  const auto parsed = from_transcript(text);
  REQUIRE(parsed.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(parsed[i].index == records[i].index);
    CHECK(parsed[i].b == records[i].b);
    CHECK(parsed[i].x == records[i].x);
    CHECK(parsed[i].y == records[i].y);
    CHECK(parsed[i].z == records[i].z);
    CHECK(parsed[i].intensity_v1.has_value() == records[i].intensity_v1.has_value());
    if (parsed[i].intensity_v1)
      CHECK(*parsed[i].intensity_v1 == doctest::Approx(*records[i].intensity_v1));
    CHECK(parsed[i].arrived_in_time == records[i].arrived_in_time);
    CHECK(parsed[i].outcomes_consistent == records[i].outcomes_consistent);
  }
  (void)g;
  (void)rng;

  CHECK_THROWS_AS(from_transcript("1 0 0\n"), std::invalid_argument);
}

TEST_CASE("decoy run transcript carries intensities") {
  ProtocolParams params;
  params.rounds = 200;
  params.n_th = 1;
  params.delta_th = 0.2;
  IntensityConfig cfg;
  cfg.mu = {0.5, 0.2, 0.01};
  cfg.p = {0.4, 0.3, 0.3};
  params.decoy_cfg = cfg;
  params.mode = ProtocolMode::decoy;

  ChannelModel channel;
  const FockBsmTable bsm(channel, photon_cutoff(cfg, 1e-12));
  RngStream rng(derive_seed(41, "decoy-transcript"));
  std::vector<RoundRecord> transcript;
  const DecoyRunResult run = run_protocol_decoy(params, cfg, bsm, Geometry::symmetric(1.0),
                                                2.0, rng, &transcript);
  REQUIRE(transcript.size() == 200);
  const auto parsed = from_transcript(to_transcript(transcript));
  REQUIRE(parsed.size() == 200);
  std::int64_t conclusive = 0;
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    REQUIRE(parsed[i].intensity_v1.has_value());
    const double g1 = *parsed[i].intensity_v1;
    CHECK((g1 == cfg.mu[0] || g1 == cfg.mu[1] || g1 == cfg.mu[2]));
    CHECK(parsed[i].z == transcript[i].z);
    if (parsed[i].z != Outcome::inconclusive) ++conclusive;
  }
  CHECK(conclusive == run.counts.n_total());
}

TEST_CASE("protocol params validation") {
  CHECK_THROWS_AS(qubit_params(10, 11, 0.1).validate(), std::invalid_argument);
  CHECK_THROWS_AS(qubit_params(10, 5, 0.25).validate(), std::invalid_argument);
  CHECK_THROWS_AS(qubit_params(0, 0, 0.1).validate(), std::invalid_argument);
  ProtocolParams decoy;
  decoy.mode = ProtocolMode::decoy;  // missing intensities
  decoy.rounds = 100;
  decoy.n_th = 10;
  decoy.delta_th = 0.1;
  CHECK_THROWS_AS(decoy.validate(), std::invalid_argument);
}

}  // TEST_SUITE
