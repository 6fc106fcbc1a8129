#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace qpv {

// Three-intensity decoy configuration. Index 0 is the signal intensity mu_1,
// indices 1 and 2 the decoys mu_2, mu_3 (mu_1 > mu_2 + mu_3, mu_2 > mu_3 >= 0).
struct IntensityConfig {
  std::array<double, 3> mu{0.3, 0.1, 0.001};
  std::array<double, 3> p{0.5, 0.25, 0.25};

  void validate() const;
};

// Test instrumentation: records which count cells an estimator touched.
struct CellAccessLog {
  std::array<std::array<int, 3>, 3> n_reads{};
  std::array<std::array<int, 3>, 3> m_reads{};

  int distinct_n_cells() const;
  int distinct_m_cells() const;
};

// Observed detection counts n_obs^{u,v} and error counts m_obs^{u,v},
// indexed by the (intensity of V1, intensity of V2) pair.
struct CountTable {
  std::array<std::array<std::int64_t, 3>, 3> detections{};
  std::array<std::array<std::int64_t, 3>, 3> errors{};
  mutable CellAccessLog* access_log = nullptr;

  std::int64_t n(int u, int v) const;
  std::int64_t m(int u, int v) const;
  std::int64_t n_total() const;
  std::int64_t m_total() const;

  void add(int u, int v, bool error);
  void validate() const;  // 0 <= m <= n cellwise

  // 3x3 CSV blocks with intensity labels on the header row/column.
  std::string to_csv(const IntensityConfig& cfg) const;
  static CountTable from_csv(const std::string& text);
};

// Simulation-only ground truth: detections and errors tagged with the true
// photon numbers (k, l) emitted by the two verifiers.
class PhotonTruth {
 public:
  explicit PhotonTruth(int max_photons = 10);

  void add(int k, int l, bool error);
  void set(int k, int l, std::int64_t s, std::int64_t r);
  std::int64_t s(int k, int l) const;
  std::int64_t r(int k, int l) const;
  std::int64_t s_total() const;
  std::int64_t r_total() const;
  int max_photons() const { return max_photons_; }

 private:
  std::size_t idx(int k, int l) const;
  int max_photons_;
  std::vector<std::int64_t> s_, r_;
};

// Probability that V1 prepares a k-photon state and V2 an l-photon state:
// sum_{u,v} p_u p_v e^{-(u+v)} u^k v^l / (k! l!).
double tau_kl(int k, int l, const IntensityConfig& cfg);

// Bayes conditional p_{u,v|k,l}; u, v are intensity indices into cfg.
double p_uv_given_kl(int u, int v, int k, int l, const IntensityConfig& cfg);

// Hoeffding deviation sqrt((n/2) log(1/eps)). With eps = e^{-2 nu} this equals
// sqrt(nu * n).
double hoeffding_delta(std::int64_t n, double eps);

// Smallest total photon cutoff K such that the neglected joint Poisson tail
// mass (both arms at the largest configured intensity) is below `tail_tol`.
int photon_cutoff(const IntensityConfig& cfg, double tail_tol = 1e-12);

struct ExpectedCounts {
  std::array<std::array<double, 3>, 3> n{};
  std::array<std::array<double, 3>, 3> m{};
  double n_total = 0.0;
  double m_total = 0.0;
};

// Expected assignment of truth detections/errors to intensity cells:
// n~^{u,v} = sum_{k,l} p_{u,v|k,l} s_{k,l} and the analogue for errors.
ExpectedCounts expected_counts(const PhotonTruth& truth, const IntensityConfig& cfg);

struct S11Estimate {
  std::int64_t s_lb = 0;     // clamped below at 0
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double raw = 0.0;          // value before flooring/clamping
};

struct R11Estimate {
  std::int64_t r_ub = 0;
  double gamma3 = 0.0;
  bool capped_by_half_s = false;
};

// Lower bound on the single-photon detections s_{1,1}. gamma_1 carries the +
// fluctuation terms and gamma_2 the - terms, with sqrt(nu * n_obs) using the
// total observed count. The Gaussian-elimination bracket is scaled by
// tau_{1,1} so the bound refers to the observed count s_{1,1} itself.
S11Estimate estimate_s11_lb(const CountTable& counts, const IntensityConfig& cfg, double nu);

// Upper bound on the single-photon errors r_{1,1}:
// min(ceil(tau_11 gamma_3 / (mu_2 - mu_3)^2), ceil(s_lb / 2)).
R11Estimate estimate_r11_ub(const CountTable& counts, std::int64_t s_lb,
                            const IntensityConfig& cfg, double nu);

// Expected-value forms (gamma', no fluctuation terms), for oracle testing
// against known photon-truth tables.
S11Estimate estimate_s11_lb_expected(const ExpectedCounts& expected, const IntensityConfig& cfg);
R11Estimate estimate_r11_ub_expected(const ExpectedCounts& expected, std::int64_t s_lb,
                                     const IntensityConfig& cfg);

// Alternate fluctuation accounting: each cell fluctuates by sqrt(nu * n^{u,v})
// with its own count instead of the total. Retained alongside the primary
// total-count form; the two differ only in the width of the intervals.
S11Estimate estimate_s11_lb_percell(const CountTable& counts, const IntensityConfig& cfg,
                                    double nu);
R11Estimate estimate_r11_ub_percell(const CountTable& counts, std::int64_t s_lb,
                                    const IntensityConfig& cfg, double nu);

struct DecoyEstimate {
  std::int64_t s_lb = 0;
  std::int64_t r_ub = 0;
  double ratio = 0.0;  // r_ub / s_lb, valid only when s_lb > 0
  double eps1 = 0.0;
  double eps2 = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma3 = 0.0;
};

DecoyEstimate run_decoy_estimators(const CountTable& counts, const IntensityConfig& cfg,
                                   double nu);

}  // namespace qpv
