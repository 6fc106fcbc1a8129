#include "qpv/decoy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "qpv/bounds.hpp"

namespace qpv {

void IntensityConfig::validate() const {
  if (!(mu[0] > mu[1] + mu[2]))
    throw std::invalid_argument("IntensityConfig: requires mu1 > mu2 + mu3");
  if (!(mu[1] > mu[2] && mu[2] >= 0.0))
    throw std::invalid_argument("IntensityConfig: requires mu2 > mu3 >= 0");
  double sum = 0.0;
  for (double q : p) {
    if (!(q > 0.0)) throw std::invalid_argument("IntensityConfig: probabilities must be positive");
    sum += q;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("IntensityConfig: probabilities must sum to 1");
}

int CellAccessLog::distinct_n_cells() const {
  int count = 0;
  for (const auto& row : n_reads)
    for (int v : row) count += (v > 0);
  return count;
}

int CellAccessLog::distinct_m_cells() const {
  int count = 0;
  for (const auto& row : m_reads)
    for (int v : row) count += (v > 0);
  return count;
}

std::int64_t CountTable::n(int u, int v) const {
  if (access_log) ++access_log->n_reads[u][v];
  return detections[u][v];
}

std::int64_t CountTable::m(int u, int v) const {
  if (access_log) ++access_log->m_reads[u][v];
  return errors[u][v];
}

std::int64_t CountTable::n_total() const {
  std::int64_t t = 0;
  for (const auto& row : detections)
    for (std::int64_t v : row) t += v;
  return t;
}

std::int64_t CountTable::m_total() const {
  std::int64_t t = 0;
  for (const auto& row : errors)
    for (std::int64_t v : row) t += v;
  return t;
}

void CountTable::add(int u, int v, bool error) {
  ++detections[u][v];
  if (error) ++errors[u][v];
}

void CountTable::validate() const {
  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v) {
      if (errors[u][v] < 0 || detections[u][v] < 0 || errors[u][v] > detections[u][v])
        throw std::invalid_argument("CountTable: requires 0 <= m <= n per cell");
    }
}

std::string CountTable::to_csv(const IntensityConfig& cfg) const {
  std::ostringstream out;
  out.precision(17);
  auto block = [&](const char* tag, const auto& cells) {
    out << tag;
    for (double mu : cfg.mu) out << ',' << mu;
    out << '\n';
    for (int u = 0; u < 3; ++u) {
      out << cfg.mu[u];
      for (int v = 0; v < 3; ++v) out << ',' << cells[u][v];
      out << '\n';
    }
  };
  block("n_obs", detections);
  block("m_obs", errors);
  return out.str();
}

CountTable CountTable::from_csv(const std::string& text) {
  CountTable table;
  std::istringstream in(text);
  std::string line;
  int block = -1;  // 0 = detections, 1 = errors
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string first;
    std::getline(cells, first, ',');
    if (first == "n_obs") { block = 0; row = 0; continue; }
    if (first == "m_obs") { block = 1; row = 0; continue; }
    if (block < 0 || row >= 3) throw std::invalid_argument("CountTable::from_csv: malformed block");
    std::string cell;
    for (int v = 0; v < 3; ++v) {
      if (!std::getline(cells, cell, ','))
        throw std::invalid_argument("CountTable::from_csv: short row");
      const std::int64_t value = std::stoll(cell);
      (block == 0 ? table.detections : table.errors)[row][v] = value;
    }
    ++row;
  }
  table.validate();
  return table;
}

PhotonTruth::PhotonTruth(int max_photons)
    : max_photons_(max_photons),
      s_(static_cast<std::size_t>(max_photons + 1) * (max_photons + 1)),
      r_(s_.size()) {}

std::size_t PhotonTruth::idx(int k, int l) const {
  if (k < 0 || l < 0 || k > max_photons_ || l > max_photons_)
    throw std::out_of_range("PhotonTruth: photon number outside table");
  return static_cast<std::size_t>(k) * (max_photons_ + 1) + l;
}

void PhotonTruth::add(int k, int l, bool error) {
  const std::size_t i = idx(k, l);
  ++s_[i];
  if (error) ++r_[i];
}

void PhotonTruth::set(int k, int l, std::int64_t s, std::int64_t r) {
  if (r < 0 || s < r) throw std::invalid_argument("PhotonTruth::set: requires 0 <= r <= s");
  const std::size_t i = idx(k, l);
  s_[i] = s;
  r_[i] = r;
}

std::int64_t PhotonTruth::s(int k, int l) const { return s_[idx(k, l)]; }
std::int64_t PhotonTruth::r(int k, int l) const { return r_[idx(k, l)]; }

std::int64_t PhotonTruth::s_total() const {
  std::int64_t t = 0;
  for (std::int64_t v : s_) t += v;
  return t;
}

std::int64_t PhotonTruth::r_total() const {
  std::int64_t t = 0;
  for (std::int64_t v : r_) t += v;
  return t;
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// p_u e^{-u} u^k / k! summed over one verifier's intensities.
double marginal_photon_prob(int k, const IntensityConfig& cfg) {
  double sum = 0.0;
  for (int i = 0; i < 3; ++i)
    sum += cfg.p[i] * std::exp(-cfg.mu[i]) * std::pow(cfg.mu[i], k);
  return sum / factorial(k);
}

}  // namespace

double tau_kl(int k, int l, const IntensityConfig& cfg) {
  if (k < 0 || l < 0) throw std::invalid_argument("tau_kl: photon numbers must be >= 0");
  // The double sum over (u, v) factorizes because the verifiers choose
  // intensities independently.
  return marginal_photon_prob(k, cfg) * marginal_photon_prob(l, cfg);
}

double p_uv_given_kl(int u, int v, int k, int l, const IntensityConfig& cfg) {
  const double tau = tau_kl(k, l, cfg);
  if (tau <= 0.0) throw std::domain_error("p_uv_given_kl: tau_{k,l} vanishes");
  const double joint = cfg.p[u] * cfg.p[v] * std::exp(-(cfg.mu[u] + cfg.mu[v])) *
                       std::pow(cfg.mu[u], k) * std::pow(cfg.mu[v], l) /
                       (factorial(k) * factorial(l));
  return joint / tau;
}

double hoeffding_delta(std::int64_t n, double eps) {
  if (n < 0) throw std::invalid_argument("hoeffding_delta: n must be >= 0");
  if (!(eps > 0.0 && eps < 1.0))
    throw std::invalid_argument("hoeffding_delta: eps must be in (0, 1)");
  return std::sqrt(0.5 * static_cast<double>(n) * std::log(1.0 / eps));
}

int photon_cutoff(const IntensityConfig& cfg, double tail_tol) {
  const double mu = cfg.mu[0];
  // Joint tail of two Poisson(mu) arms beyond total K.
  for (int cutoff = 2; cutoff <= 200; ++cutoff) {
    double head = 0.0;
    for (int k = 0; k <= cutoff; ++k)
      for (int l = 0; k + l <= cutoff; ++l)
        head += std::exp(-2.0 * mu) * std::pow(mu, k + l) / (factorial(k) * factorial(l));
    if (1.0 - head < tail_tol) return cutoff;
  }
  throw std::domain_error("photon_cutoff: no cutoff below 200 reaches the tail tolerance");
}

ExpectedCounts expected_counts(const PhotonTruth& truth, const IntensityConfig& cfg) {
  ExpectedCounts out;
  for (int k = 0; k <= truth.max_photons(); ++k)
    for (int l = 0; l <= truth.max_photons(); ++l) {
      const std::int64_t s = truth.s(k, l);
      const std::int64_t r = truth.r(k, l);
      if (s == 0 && r == 0) continue;
      for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 3; ++v) {
          const double w = p_uv_given_kl(u, v, k, l, cfg);
          out.n[u][v] += w * static_cast<double>(s);
          out.m[u][v] += w * static_cast<double>(r);
        }
    }
  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v) {
      out.n_total += out.n[u][v];
      out.m_total += out.m[u][v];
    }
  return out;
}

namespace {

struct Xi {
  std::array<std::array<double, 3>, 3> v{};
};

Xi make_xi(const IntensityConfig& cfg) {
  Xi xi;
  for (int u = 0; u < 3; ++u)
    for (int v = 0; v < 3; ++v)
      xi.v[u][v] = std::exp(cfg.mu[u] + cfg.mu[v]) / (cfg.p[u] * cfg.p[v]);
  return xi;
}

// Shared Gaussian-elimination tail of Eq. for s_lb. gamma1 is built from the
// (mu1, mu3) cells, gamma2 from the (mu2, mu3) cells.
S11Estimate s11_from_gammas(double gamma1, double gamma2, const IntensityConfig& cfg) {
  const double mu1 = cfg.mu[0], mu2 = cfg.mu[1], mu3 = cfg.mu[2];
  const double c2 = (mu1 * mu1 - mu3 * mu3) * (mu1 - mu3);
  const double c1 = (mu2 * mu2 - mu3 * mu3) * (mu2 - mu3);
  const double denom = (mu1 - mu3) * (mu1 - mu3) * (mu2 - mu3) * (mu2 - mu3) * (mu1 - mu2);
  const double bracket = (c2 * gamma2 - c1 * gamma1) / denom;
  // The bracket bounds the would-be count had every pulse pair carried exactly
  // one photon per arm; tau_{1,1} converts it to a bound on s_{1,1} itself.
  const double raw = tau_kl(1, 1, cfg) * bracket;
  S11Estimate est;
  est.gamma1 = gamma1;
  est.gamma2 = gamma2;
  est.raw = raw;
  est.s_lb = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(raw)));
  return est;
}

R11Estimate r11_from_gamma(double gamma3, std::int64_t s_lb, const IntensityConfig& cfg) {
  const double mu2 = cfg.mu[1], mu3 = cfg.mu[2];
  const double raw = tau_kl(1, 1, cfg) * gamma3 / ((mu2 - mu3) * (mu2 - mu3));
  const std::int64_t from_gamma =
      std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(raw)));
  const std::int64_t half_s = (s_lb + 1) / 2;  // ceil(s_lb / 2)
  R11Estimate est;
  est.gamma3 = gamma3;
  est.capped_by_half_s = half_s < from_gamma;
  est.r_ub = est.capped_by_half_s ? half_s : from_gamma;
  return est;
}

}  // namespace

S11Estimate estimate_s11_lb(const CountTable& counts, const IntensityConfig& cfg, double nu) {
  cfg.validate();
  if (!(nu >= 0.0)) throw std::invalid_argument("estimate_s11_lb: nu must be >= 0");
  const Xi xi = make_xi(cfg);
  const double fluct = std::sqrt(nu * static_cast<double>(counts.n_total()));
  const double gamma1 =
      xi.v[0][0] * counts.n(0, 0) + xi.v[2][2] * counts.n(2, 2) -
      xi.v[0][2] * counts.n(0, 2) - xi.v[2][0] * counts.n(2, 0) +
      fluct * (xi.v[0][0] + xi.v[2][2] + 2.0 * xi.v[0][2]);
  const double gamma2 =
      xi.v[1][1] * counts.n(1, 1) + xi.v[2][2] * counts.n(2, 2) -
      xi.v[1][2] * counts.n(1, 2) - xi.v[2][1] * counts.n(2, 1) -
      fluct * (xi.v[1][1] + xi.v[2][2] + 2.0 * xi.v[1][2]);
  return s11_from_gammas(gamma1, gamma2, cfg);
}

R11Estimate estimate_r11_ub(const CountTable& counts, std::int64_t s_lb,
                            const IntensityConfig& cfg, double nu) {
  cfg.validate();
  if (!(nu >= 0.0)) throw std::invalid_argument("estimate_r11_ub: nu must be >= 0");
  const Xi xi = make_xi(cfg);
  const double fluct = std::sqrt(nu * static_cast<double>(counts.m_total()));
  const double gamma3 =
      xi.v[1][1] * counts.m(1, 1) + xi.v[2][2] * counts.m(2, 2) -
      xi.v[1][2] * counts.m(1, 2) - xi.v[2][1] * counts.m(2, 1) +
      fluct * (xi.v[1][1] + xi.v[2][2] + 2.0 * xi.v[1][2]);
  return r11_from_gamma(gamma3, s_lb, cfg);
}

S11Estimate estimate_s11_lb_expected(const ExpectedCounts& expected, const IntensityConfig& cfg) {
  cfg.validate();
  const Xi xi = make_xi(cfg);
  const double gamma1 = xi.v[0][0] * expected.n[0][0] + xi.v[2][2] * expected.n[2][2] -
                        xi.v[0][2] * expected.n[0][2] - xi.v[2][0] * expected.n[2][0];
  const double gamma2 = xi.v[1][1] * expected.n[1][1] + xi.v[2][2] * expected.n[2][2] -
                        xi.v[1][2] * expected.n[1][2] - xi.v[2][1] * expected.n[2][1];
  return s11_from_gammas(gamma1, gamma2, cfg);
}

R11Estimate estimate_r11_ub_expected(const ExpectedCounts& expected, std::int64_t s_lb,
                                     const IntensityConfig& cfg) {
  cfg.validate();
  const Xi xi = make_xi(cfg);
  const double gamma3 = xi.v[1][1] * expected.m[1][1] + xi.v[2][2] * expected.m[2][2] -
                        xi.v[1][2] * expected.m[1][2] - xi.v[2][1] * expected.m[2][1];
  return r11_from_gamma(gamma3, s_lb, cfg);
}

S11Estimate estimate_s11_lb_percell(const CountTable& counts, const IntensityConfig& cfg,
                                    double nu) {
  cfg.validate();
  if (!(nu >= 0.0)) throw std::invalid_argument("estimate_s11_lb_percell: nu must be >= 0");
  const Xi xi = make_xi(cfg);
  const double root_nu = std::sqrt(nu);
  auto dev = [&](std::int64_t cell) { return root_nu * std::sqrt(static_cast<double>(cell)); };
  const std::int64_t n00 = counts.n(0, 0), n22 = counts.n(2, 2), n02 = counts.n(0, 2),
                     n20 = counts.n(2, 0), n11 = counts.n(1, 1), n12 = counts.n(1, 2),
                     n21 = counts.n(2, 1);
  const double gamma1 =
      xi.v[0][0] * (n00 + dev(n00)) + xi.v[2][2] * (n22 + dev(n22)) -
      xi.v[0][2] * (n02 - dev(n02)) - xi.v[2][0] * (n20 - dev(n20));
  const double gamma2 =
      xi.v[1][1] * (n11 - dev(n11)) + xi.v[2][2] * (n22 - dev(n22)) -
      xi.v[1][2] * (n12 + dev(n12)) - xi.v[2][1] * (n21 + dev(n21));
  return s11_from_gammas(gamma1, gamma2, cfg);
}

R11Estimate estimate_r11_ub_percell(const CountTable& counts, std::int64_t s_lb,
                                    const IntensityConfig& cfg, double nu) {
  cfg.validate();
  if (!(nu >= 0.0)) throw std::invalid_argument("estimate_r11_ub_percell: nu must be >= 0");
  const Xi xi = make_xi(cfg);
  const double root_nu = std::sqrt(nu);
  auto dev = [&](std::int64_t cell) { return root_nu * std::sqrt(static_cast<double>(cell)); };
  const std::int64_t m11 = counts.m(1, 1), m22 = counts.m(2, 2), m12 = counts.m(1, 2),
                     m21 = counts.m(2, 1);
  const double gamma3 =
      xi.v[1][1] * (m11 + dev(m11)) + xi.v[2][2] * (m22 + dev(m22)) -
      xi.v[1][2] * (m12 - dev(m12)) - xi.v[2][1] * (m21 - dev(m21));
  return r11_from_gamma(gamma3, s_lb, cfg);
}

DecoyEstimate run_decoy_estimators(const CountTable& counts, const IntensityConfig& cfg,
                                   double nu) {
  const S11Estimate s = estimate_s11_lb(counts, cfg, nu);
  const R11Estimate r = estimate_r11_ub(counts, s.s_lb, cfg, nu);
  DecoyEstimate est;
  est.s_lb = s.s_lb;
  est.r_ub = r.r_ub;
  est.ratio = (s.s_lb > 0) ? static_cast<double>(r.r_ub) / static_cast<double>(s.s_lb) : 0.0;
  est.gamma1 = s.gamma1;
  est.gamma2 = s.gamma2;
  est.gamma3 = r.gamma3;
  const DecoySoundness ds = soundness_decoy({1, 0.0, nu});
  est.eps1 = ds.eps1;
  est.eps2 = ds.eps2;
  return est;
}

}  // namespace qpv
