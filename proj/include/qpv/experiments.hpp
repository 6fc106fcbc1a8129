#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "qpv/protocol.hpp"

namespace qpv {

// Every reported rate carries its sample count and standard error.
struct Aggregate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

Aggregate binomial_aggregate(std::int64_t hits, std::int64_t samples);

struct ExperimentReport {
  nlohmann::json config_echo;
  std::int64_t trials = 0;
  std::int64_t accepted = 0;
  std::array<std::int64_t, 5> reason_counts{};  // indexed by VerdictReason
  Aggregate acceptance;
  Aggregate detection_rate;
  Aggregate error_rate;            // conditional on conclusive rounds
  Aggregate guessing_probability;  // 1 - conditional error rate
  double soundness_bound = 0.0;    // eps_qubit at the run's parameters
  DecoySoundness decoy_soundness;
  Aggregate coverage_s;  // decoy: frequency of s_lb <= s_{1,1} (all trials)
  Aggregate coverage_r;  // decoy: frequency of r_{1,1} <= r_ub (all trials;
                         // an unformed estimate counts as r_ub = 0)
  // Trials whose s_lb was positive, i.e. the estimators actually certified
  // something; coverage_r_formed conditions on these.
  std::int64_t estimates_formed = 0;
  Aggregate coverage_r_formed;
  std::int64_t rounds_beyond_cutoff = 0;
  std::vector<std::string> output_files;
};

// Independent Protocol-1 runs; verdict frequencies vs the qubit soundness
// bound. Trials execute on a worker pool with per-trial derived streams, so
// results do not depend on the thread count.
ExperimentReport run_qubit_mc(const ProtocolParams& params, const Responder& responder,
                              const Geometry& geometry, std::int64_t trials,
                              std::uint64_t seed, int threads = 1);

// Round-level attack statistics (no protocol machinery): conditional guessing
// probability and detection rate of a strategy over `rounds` rounds.
struct AttackRoundStats {
  Aggregate guess_probability;  // conditional on a conclusive report
  Aggregate detection_rate;
  Aggregate error_rate;
};

AttackRoundStats attack_round_statistics(const AttackStrategy& strategy, std::int64_t rounds,
                                         std::uint64_t seed);

// Honest decoy protocol runs against the Fock backend, with ground-truth
// coverage bookkeeping of the decoy estimators.
ExperimentReport run_decoy_mc(const ProtocolParams& params, const ChannelModel& channel,
                              const IntensityConfig& cfg, double nu, std::int64_t trials,
                              std::uint64_t seed, int threads = 1);

struct Figure3Point {
  double loss_db = 0.0;
  double ratio = 0.0;  // r_ub / s_lb; 0 and flagged when s_lb == 0
  std::int64_t s_lb = 0;
  std::int64_t r_ub = 0;
  double pulses = 0.0;  // N
  bool s_lb_zero = false;
};

// Deterministic expected-statistics pipeline: expected counts
// n^{u,v} = N p_u p_v Q^{u,v} (rounded half-to-even) fed through the decoy
// estimators at each loss point. No sampling anywhere.
std::vector<Figure3Point> figure3_curve(double pulses, const ChannelModel& channel,
                                        const IntensityConfig& cfg, double nu,
                                        std::span<const double> loss_grid_db, int threads = 1);

std::vector<double> make_loss_grid(double from_db, double to_db, double step_db);

struct CutoffResult {
  std::optional<double> loss_db;      // first upward crossing
  std::vector<double> crossings;      // all upward crossings found
  bool ambiguous = false;             // more than one crossing
};

// Linear interpolation of the first upward crossing of `threshold`.
CutoffResult find_cutoff(std::span<const Figure3Point> points, double threshold = 0.25);

// Maximizes the cutoff loss at the given pulse count over a grid of intensity
// configurations (mu1 in [0.1, 0.6], mu2 in [0.01, 0.2], mu3 in {0, 1e-3, 2e-3});
// the selection probabilities stay at the supplied allocation (they cancel in
// the acceptance ratio except through the fluctuation penalties).
struct GridSearchResult {
  IntensityConfig config;
  double cutoff_db = 0.0;
  int evaluated = 0;
};

GridSearchResult grid_search_intensities(double pulses, const ChannelModel& channel, double nu,
                                         const std::array<double, 3>& probabilities,
                                         int threads = 1);

// Intensity configuration used for the loss-curve reproduction (the outcome of
// grid_search_intensities at N = 1e13 with the reference channel).
IntensityConfig figure3_intensities();

nlohmann::json report_to_json(const ExperimentReport& report);

}  // namespace qpv
