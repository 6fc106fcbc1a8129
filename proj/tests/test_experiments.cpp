#include <doctest.h>

#include <cmath>

#include "qpv/experiments.hpp"

using namespace qpv;

namespace {

IntensityConfig bright_cfg() {
  // Intensities sized so m = O(1e5..1e6) rounds give a positive s_lb at nu = 2.
  IntensityConfig cfg;
  cfg.mu = {0.8, 0.35, 0.01};
  cfg.p = {0.2, 0.4, 0.4};
  return cfg;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("binomial aggregate") {
  const Aggregate a = binomial_aggregate(25, 100);
  CHECK(a.value == doctest::Approx(0.25));
  CHECK(a.std_error == doctest::Approx(std::sqrt(0.25 * 0.75 / 100.0)));
  CHECK(a.samples == 100);
  CHECK(binomial_aggregate(0, 0).samples == 0);
}

TEST_CASE("honest qubit monte carlo accepts") {
  ProtocolParams params;
  params.rounds = 10000;
  params.n_th = 4000;  // well under the ~5000 expected detections
  params.delta_th = 0.01;
  const Geometry g = Geometry::symmetric(1.0);
  const ExperimentReport report =
      run_qubit_mc(params, honest_ideal_responder(g), g, 100, 99, 1);
  CHECK(report.acceptance.value == doctest::Approx(1.0));
  CHECK(report.error_rate.value == doctest::Approx(0.0));
  CHECK(std::abs(report.detection_rate.value - 0.5) < 5.0 * report.detection_rate.std_error);
  CHECK(report.reason_counts[static_cast<int>(VerdictReason::accept)] == 100);

  CHECK_THROWS_AS(run_qubit_mc(params, honest_ideal_responder(g), g, 0, 99, 1),
                  std::invalid_argument);
}

TEST_CASE("attack acceptance stays under the qubit soundness bound") {
  ProtocolParams params;
  params.rounds = 100;
  params.n_th = 50;
  params.delta_th = 0.15;
  const Geometry g = Geometry::symmetric(1.0);
  const Responder attacker = adversary_responder(locc_xbasis_strategy(1.0), 0.2, 1.8);
  const ExperimentReport report = run_qubit_mc(params, attacker, g, 2000, 4242, 1);

  // Bound: exp(-2 * 50 * (0.25 - 0.15)^2) = exp(-1).
  CHECK(report.soundness_bound == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(report.acceptance.value <= report.soundness_bound + 3.0 * report.acceptance.std_error);

  // The attack's conditional error rate concentrates near 1/4.
  CHECK(std::abs(report.error_rate.value - 0.25) < 5.0 * report.error_rate.std_error);
}

TEST_CASE("attack round statistics at several detection efficiencies") {
  for (double eta : {0.05, 0.5, 1.0}) {
    const AttackRoundStats stats =
        attack_round_statistics(locc_xbasis_strategy(eta), 150000, 7);
    CAPTURE(eta);
    CHECK(std::abs(stats.guess_probability.value - 0.75) <
          5.0 * stats.guess_probability.std_error);
    CHECK(std::abs(stats.detection_rate.value - eta) <= 5.0 * stats.detection_rate.std_error + 1e-12);
    CHECK(std::abs(stats.error_rate.value - 0.25) < 5.0 * stats.error_rate.std_error);
  }
}

TEST_CASE("decoy monte carlo coverage semantics") {
  // Below the certification threshold (~7e6 rounds at nu = 2 for any
  // three-intensity configuration) the s bound clamps to zero: trivially
  // covered, quota always fails, and no r estimate is formed.
  SUBCASE("starved statistics: s_lb = 0, quota fails") {
    ProtocolParams params;
    params.rounds = 200000;
    params.n_th = 50;
    params.delta_th = 0.24;
    const ExperimentReport report =
        run_decoy_mc(params, ChannelModel{}, bright_cfg(), 2.0, 8, 11, 1);
    CHECK(report.coverage_s.value == doctest::Approx(1.0));
    CHECK(report.estimates_formed == 0);
    CHECK(report.reason_counts[static_cast<int>(VerdictReason::quota_fail)] == 8);
    CHECK(report.decoy_soundness.eps1 > 0.0);
    CHECK(report.error_rate.value > 0.0);
    CHECK(report.error_rate.value < 0.5);
  }

  // Past the threshold the estimates form and cover the ground truth; the
  // verdict still rejects because the finite-statistics ratio caps near 1/2
  // (honest acceptance needs figure-3 scale pulse counts).
  SUBCASE("formed estimates cover the ground truth") {
    ProtocolParams params;
    params.rounds = 12000000;
    params.n_th = 50;
    params.delta_th = 0.24;
    IntensityConfig cfg;
    cfg.mu = {0.6, 0.25, 0.001};
    cfg.p = {0.3, 0.35, 0.35};
    const ExperimentReport report =
        run_decoy_mc(params, ChannelModel{}, cfg, 2.0, 2, 12, 1);
    CHECK(report.estimates_formed == 2);
    CHECK(report.coverage_s.value == doctest::Approx(1.0));
    CHECK(report.coverage_r.value == doctest::Approx(1.0));
    CHECK(report.coverage_r_formed.value == doctest::Approx(1.0));
    CHECK(report.reason_counts[static_cast<int>(VerdictReason::error_rate_fail)] == 2);
  }
}

TEST_CASE("estimators stay finite with a vacuum decoy (mu3 = 0)") {
  IntensityConfig cfg = bright_cfg();
  cfg.mu[2] = 0.0;
  ProtocolParams params;
  params.rounds = 100000;
  params.n_th = 50;
  params.delta_th = 0.24;
  const ExperimentReport report = run_decoy_mc(params, ChannelModel{}, cfg, 2.0, 4, 13, 1);
  CHECK(std::isfinite(report.acceptance.value));
  CHECK(report.coverage_s.value == doctest::Approx(1.0));
  CHECK(report.trials == 4);
}

TEST_CASE("fluctuation-dominated ratio shrinks with more rounds") {
  // Dark counts off, zero channel loss: the residual ratio is pure estimator
  // fluctuation and must shrink as the round count grows. The two-point
  // scaling runs through the deterministic expected-count pipeline.
  ChannelModel clean;
  clean.dark_count_prob = 0.0;
  IntensityConfig cfg;
  cfg.mu = {0.6, 0.25, 0.001};
  cfg.p = {0.3, 0.35, 0.35};
  const double at_floor = clean.bsm_intrinsic_loss_db() + 1e-3;
  const std::array<double, 1> grid = {at_floor};

  auto ratio_at = [&](double rounds) {
    const auto points = figure3_curve(rounds, clean, cfg, 2.0, grid, 1);
    REQUIRE_FALSE(points[0].s_lb_zero);
    return points[0].ratio;
  };
  const double coarse = ratio_at(3e7);
  const double fine = ratio_at(3e8);
  CHECK(fine < coarse);
  CHECK(coarse <= 1.0);
}

TEST_CASE("figure3 pipeline is deterministic and independent of thread count") {
  const ChannelModel channel;
  const IntensityConfig cfg = figure3_intensities();
  const auto grid = make_loss_grid(8.0, 20.0, 2.0);
  const auto a = figure3_curve(1e10, channel, cfg, 10.0, grid, 1);
  const auto b = figure3_curve(1e10, channel, cfg, 10.0, grid, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].loss_db == b[i].loss_db);
    CHECK(a[i].ratio == b[i].ratio);  // bit-identical
    CHECK(a[i].s_lb == b[i].s_lb);
    CHECK(a[i].r_ub == b[i].r_ub);
  }
}

TEST_CASE("figure3 sampled counts match the expected-count pipeline") {
  // 10 dB, N = 1e7 sampled rounds vs N * p_u p_v Q^{u,v}, within 5-sigma
  // Poisson bands cellwise.
  const ChannelModel channel = ChannelModel{}.with_overall_loss_db(10.0);
  const IntensityConfig cfg = figure3_intensities();
  const std::int64_t rounds = 10000000;

  ProtocolParams params;
  params.rounds = rounds;
  params.n_th = 1;
  params.delta_th = 0.24;
  const FockBsmTable bsm(channel, photon_cutoff(cfg, 1e-12));
  RngStream rng(derive_seed(23, "mc-vs-analytic"));
  const DecoyRunResult run =
      run_protocol_decoy(params, cfg, bsm, Geometry::symmetric(1.0), 10.0, rng);

  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v) {
      const GainError ge = expected_gain_error(cfg.mu[u], cfg.mu[v], channel);
      const double expected = static_cast<double>(rounds) * cfg.p[u] * cfg.p[v] * ge.gain;
      CAPTURE(u);
      CAPTURE(v);
      if (expected > 25.0) {
        CHECK(std::abs(static_cast<double>(run.counts.detections[u][v]) - expected) <
              5.0 * std::sqrt(expected));
      } else {
        CHECK(static_cast<double>(run.counts.detections[u][v]) <= expected + 25.0);
      }
    }
}

TEST_CASE("find_cutoff") {
  // Constant ratio below threshold: no crossing.
  std::vector<Figure3Point> flat(5);
  for (int i = 0; i < 5; ++i) flat[i] = {10.0 + i, 0.1, 100, 10, 1e10, false};
  CHECK_FALSE(find_cutoff(flat).loss_db.has_value());

  // Linear interpolation between (40, 0.2) and (50, 0.3).
  std::vector<Figure3Point> two = {{40.0, 0.2, 100, 20, 1e10, false},
                                   {50.0, 0.3, 100, 30, 1e10, false}};
  const CutoffResult cut = find_cutoff(two);
  REQUIRE(cut.loss_db.has_value());
  CHECK(*cut.loss_db == doctest::Approx(45.0));
  CHECK_FALSE(cut.ambiguous);

  // Non-monotone region: all crossings reported, ambiguity flagged.
  std::vector<Figure3Point> wiggle = {{10.0, 0.2, 100, 20, 1e10, false},
                                      {11.0, 0.3, 100, 30, 1e10, false},
                                      {12.0, 0.2, 100, 20, 1e10, false},
                                      {13.0, 0.3, 100, 30, 1e10, false}};
  const CutoffResult multi = find_cutoff(wiggle);
  CHECK(multi.ambiguous);
  CHECK(multi.crossings.size() == 2);

  // Collapse into s_lb = 0 pins the crossing to the collapse point.
  std::vector<Figure3Point> collapse = {{10.0, 0.1, 100, 10, 1e10, false},
                                        {11.0, 0.0, 0, 0, 1e10, true}};
  const CutoffResult pinned = find_cutoff(collapse);
  REQUIRE(pinned.loss_db.has_value());
  CHECK(*pinned.loss_db == doctest::Approx(11.0));
}

TEST_CASE("cutoff moves with pulse count and dark counts") {
  const ChannelModel channel;
  const IntensityConfig cfg = figure3_intensities();
  const auto grid = make_loss_grid(10.0, 60.0, 1.0);

  const auto curve_small = figure3_curve(1e10, channel, cfg, 10.0, grid, 1);
  const auto curve_large = figure3_curve(1e12, channel, cfg, 10.0, grid, 1);
  const CutoffResult small = find_cutoff(curve_small);
  const CutoffResult large = find_cutoff(curve_large);
  REQUIRE(small.loss_db.has_value());
  REQUIRE(large.loss_db.has_value());
  CHECK(*large.loss_db > *small.loss_db);  // more pulses tolerate more loss

  ChannelModel noisy = channel;
  noisy.dark_count_prob = 1e-4;
  const CutoffResult darker = find_cutoff(figure3_curve(1e12, noisy, cfg, 10.0, grid, 1));
  REQUIRE(darker.loss_db.has_value());
  CHECK(*darker.loss_db < *large.loss_db);  // dark counts eat the margin
}

TEST_CASE("loss grid construction") {
  const auto grid = make_loss_grid(5.0, 7.0, 0.5);
  REQUIRE(grid.size() == 5);
  CHECK(grid.front() == doctest::Approx(5.0));
  CHECK(grid.back() == doctest::Approx(7.0));
  CHECK_THROWS_AS(make_loss_grid(5.0, 4.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(make_loss_grid(5.0, 6.0, 0.0), std::invalid_argument);
}

}  // TEST_SUITE
