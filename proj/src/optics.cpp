#include "qpv/optics.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace qpv {

namespace {

constexpr unsigned kMaskD1H = 1u << 0;
constexpr unsigned kMaskD1V = 1u << 1;
constexpr unsigned kMaskD2H = 1u << 2;
constexpr unsigned kMaskD2V = 1u << 3;

constexpr unsigned kPsiPlusA = kMaskD1H | kMaskD1V;
constexpr unsigned kPsiPlusB = kMaskD2H | kMaskD2V;
constexpr unsigned kPsiMinusA = kMaskD1H | kMaskD2V;
constexpr unsigned kPsiMinusB = kMaskD1V | kMaskD2H;

void require_probability(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw std::invalid_argument(std::string("ChannelModel: ") + name + " must be in [0, 1]");
  }
}

}  // namespace

void ChannelModel::validate() const {
  require_probability(transmittance_v1, "transmittance_v1");
  require_probability(transmittance_v2, "transmittance_v2");
  require_probability(misalignment_error, "misalignment_error");
  require_probability(detector_efficiency, "detector_efficiency");
  require_probability(dark_count_prob, "dark_count_prob");
  if (!(transmittance_v1 > 0.0 && transmittance_v2 > 0.0))
    throw std::invalid_argument("ChannelModel: transmittance must be positive");
  if (!(detector_efficiency > 0.0))
    throw std::invalid_argument("ChannelModel: detector_efficiency must be positive");
  if (2.0 * misalignment_error > 1.0)
    throw std::invalid_argument("ChannelModel: misalignment_error too large to calibrate");
}

double ChannelModel::bsm_intrinsic_loss_db() const {
  return -10.0 * std::log10(0.5 * detector_efficiency * detector_efficiency);
}

double ChannelModel::misalignment_rotation() const {
  return std::asin(std::sqrt(2.0 * misalignment_error));
}

ChannelModel ChannelModel::with_overall_loss_db(double overall_db) const {
  const double channel_db = overall_db - bsm_intrinsic_loss_db();
  if (channel_db < -1e-9)
    throw std::invalid_argument("with_overall_loss_db: below the intrinsic BSM loss");
  const double per_arm_db = std::max(0.0, channel_db) / 2.0;
  ChannelModel out = *this;
  out.transmittance_v1 = std::pow(10.0, -per_arm_db / 10.0);
  out.transmittance_v2 = out.transmittance_v1;
  return out;
}

ChannelModel ChannelModel::from_kv_text(const std::string& text) {
  ChannelModel model;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    const double v = std::stod(value);
    if (key == "transmittance_db") {
      const double per_arm = v / 2.0;
      model.transmittance_v1 = std::pow(10.0, -per_arm / 10.0);
      model.transmittance_v2 = model.transmittance_v1;
    } else if (key == "misalignment") {
      model.misalignment_error = v;
    } else if (key == "det_eff") {
      model.detector_efficiency = v;
    } else if (key == "dark_count") {
      model.dark_count_prob = v;
    } else {
      throw std::invalid_argument("ChannelModel: unknown key '" + key + "'");
    }
  }
  model.validate();
  return model;
}

ChannelModel ChannelModel::from_kv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ChannelModel: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_kv_text(buf.str());
}

std::string ChannelModel::to_kv_text() const {
  std::ostringstream out;
  out.precision(17);
  const double total_db =
      -10.0 * std::log10(transmittance_v1) - 10.0 * std::log10(transmittance_v2);
  out << "transmittance_db = " << total_db << '\n';
  out << "misalignment = " << misalignment_error << '\n';
  out << "det_eff = " << detector_efficiency << '\n';
  out << "dark_count = " << dark_count_prob << '\n';
  return out.str();
}

BsmValue classify_click_mask(unsigned mask) {
  if (mask == kPsiPlusA || mask == kPsiPlusB) return BsmValue::psi_plus;
  if (mask == kPsiMinusA || mask == kPsiMinusB) return BsmValue::psi_minus;
  return BsmValue::inconclusive;
}

BsmOutcome outcome_from_mask(unsigned mask) {
  BsmOutcome out;
  out.value = classify_click_mask(mask);
  for (int i = 0; i < 4; ++i) out.clicks[i] = (mask >> i) & 1u;
  return out;
}

std::array<complexd, 2> bb84_polarization(int basis, int bit) {
  if ((basis != 0 && basis != 1) || (bit != 0 && bit != 1))
    throw std::invalid_argument("bb84_polarization: inputs must be bits");
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  // (|H> + i^{k1} (-1)^{k2} |V>)/sqrt(2)
  complexd coeff = (basis == 0) ? complexd{1.0, 0.0} : complexd{0.0, 1.0};
  if (bit == 1) coeff = -coeff;
  return {inv_sqrt2, coeff * inv_sqrt2};
}

BsmOutcome ideal_bsm_single_photon(int b, int x, int y, RngStream& rng) {
  if ((b | x | y) < 0 || b > 1 || x > 1 || y > 1)
    throw std::invalid_argument("ideal_bsm_single_photon: inputs must be bits");
  (void)b;  // the statistics are basis-independent
  if (rng.bit() == 0) return outcome_from_mask(0);
  if (x == y) return outcome_from_mask(rng.bit() ? kPsiPlusA : kPsiPlusB);
  return outcome_from_mask(rng.bit() ? kPsiMinusA : kPsiMinusB);
}

namespace {

struct ArmAmplitudes {
  complexd h, v;  // polarization amplitudes after misalignment rotation
};

ArmAmplitudes rotated_polarization(int basis, int bit, double angle) {
  const auto pol = bb84_polarization(basis, bit);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * pol[0] - s * pol[1], s * pol[0] + c * pol[1]};
}

// Detector-plane amplitudes for coherent inputs alpha1, alpha2 (per arm, before
// polarization): D1P = (a1P + a2P)/sqrt(2), D2P = (a1P - a2P)/sqrt(2) with the
// arm amplitudes already attenuated by sqrt(transmittance * det_eff).
std::array<complexd, 4> detector_amplitudes(const PulsePair& pulse, const ChannelModel& channel,
                                            complexd alpha1, complexd alpha2) {
  // Misalignment is a relative rotation between the arms, carried by arm 2.
  const double theta = channel.misalignment_rotation();
  const ArmAmplitudes p1 = rotated_polarization(pulse.state_v1.basis, pulse.state_v1.bit, 0.0);
  const ArmAmplitudes p2 = rotated_polarization(pulse.state_v2.basis, pulse.state_v2.bit, theta);
  const double s1 = std::sqrt(channel.transmittance_v1 * channel.detector_efficiency);
  const double s2 = std::sqrt(channel.transmittance_v2 * channel.detector_efficiency);
  const complexd a1h = alpha1 * p1.h * s1;
  const complexd a1v = alpha1 * p1.v * s1;
  const complexd a2h = alpha2 * p2.h * s2;
  const complexd a2v = alpha2 * p2.v * s2;
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  return {(a1h + a2h) * inv_sqrt2, (a1v + a2v) * inv_sqrt2,
          (a1h - a2h) * inv_sqrt2, (a1v - a2v) * inv_sqrt2};
}

std::array<double, 4> click_probabilities(const std::array<complexd, 4>& amps, double dark) {
  std::array<double, 4> p{};
  for (int i = 0; i < 4; ++i) p[i] = 1.0 - (1.0 - dark) * std::exp(-std::norm(amps[i]));
  return p;
}

}  // namespace

std::array<complexd, 4> coherent_detector_amplitudes(const PulsePair& pulse,
                                                     const ChannelModel& channel, double phase1,
                                                     double phase2) {
  const complexd alpha1 = std::sqrt(pulse.intensity_v1) * std::polar(1.0, phase1);
  const complexd alpha2 = std::sqrt(pulse.intensity_v2) * std::polar(1.0, phase2);
  return detector_amplitudes(pulse, channel, alpha1, alpha2);
}

BsmOutcome coherent_bsm(const PulsePair& pulse, const ChannelModel& channel, RngStream& rng) {
  channel.validate();
  if (pulse.photons)
    throw std::invalid_argument("coherent_bsm: pulse carries Fock photon numbers");
  double phase1, phase2;
  if (pulse.phases) {
    phase1 = pulse.phases->first;
    phase2 = pulse.phases->second;
  } else {
    phase1 = 2.0 * std::numbers::pi * rng.uniform();
    phase2 = 2.0 * std::numbers::pi * rng.uniform();
  }
  const complexd alpha1 = std::sqrt(pulse.intensity_v1) * std::polar(1.0, phase1);
  const complexd alpha2 = std::sqrt(pulse.intensity_v2) * std::polar(1.0, phase2);
  const auto amps = detector_amplitudes(pulse, channel, alpha1, alpha2);
  const auto p = click_probabilities(amps, channel.dark_count_prob);
  unsigned mask = 0;
  for (int i = 0; i < 4; ++i)
    if (rng.bernoulli(p[i])) mask |= 1u << i;
  return outcome_from_mask(mask);
}

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double binomial(int n, int k) { return factorial(n) / (factorial(k) * factorial(n - k)); }

// || (A1~^dagger)^k (A2~^dagger)^l |0> ||^2 / (k! l!) for restricted mode
// coefficient vectors u~, v~: the probability that all removed modes stay
// empty. Two effective modes suffice because each arm feeds one mode shape.
double vacuum_projection(const std::vector<complexd>& u, const std::vector<complexd>& v, int k,
                         int l) {
  double a2 = 0.0, vnorm2 = 0.0;
  complexd overlap = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    a2 += std::norm(u[i]);
    vnorm2 += std::norm(v[i]);
    overlap += std::conj(u[i]) * v[i];
  }
  if (k == 0 && l == 0) return 1.0;
  if (a2 <= 0.0) {
    if (k > 0) return 0.0;
    return std::pow(vnorm2, l);
  }
  const double b2 = std::norm(overlap) / a2;
  const double c2 = std::max(0.0, vnorm2 - b2);
  double sum = 0.0;
  for (int j = 0; j <= l; ++j) {
    const double comb = binomial(l, j);
    sum += comb * comb * std::pow(b2, j) * std::pow(c2, l - j) * factorial(k + j) *
           factorial(l - j);
  }
  return std::pow(a2, k) * sum / (factorial(k) * factorial(l));
}

}  // namespace

unsigned PatternDistribution::sample_mask(RngStream& rng) const {
  double u = rng.uniform();
  for (unsigned mask = 0; mask < 16; ++mask) {
    u -= pattern[mask];
    if (u < 0.0) return mask;
  }
  return 0;  // roundoff: the remainder belongs to the no-click mask
}

Outcome PatternDistribution::sample_outcome(RngStream& rng) const {
  const double u = rng.uniform();
  if (u < p_plus) return Outcome::zero;
  if (u < p_plus + p_minus) return Outcome::one;
  return Outcome::inconclusive;
}

PatternDistribution fock_pattern_distribution(int b, int x, int y, int k, int l,
                                              const ChannelModel& channel) {
  channel.validate();
  if (k < 0 || l < 0) throw std::invalid_argument("fock_pattern_distribution: negative photons");

  // Mode order: D1H, D1V, D2H, D2V, loss1H, loss1V, loss2H, loss2V.
  const double theta = channel.misalignment_rotation();
  const ArmAmplitudes p1 = rotated_polarization(b, x, 0.0);
  const ArmAmplitudes p2 = rotated_polarization(b, y, theta);
  const double eff1 = channel.transmittance_v1 * channel.detector_efficiency;
  const double eff2 = channel.transmittance_v2 * channel.detector_efficiency;
  const double s1 = std::sqrt(eff1 / 2.0), r1 = std::sqrt(1.0 - eff1);
  const double s2 = std::sqrt(eff2 / 2.0), r2 = std::sqrt(1.0 - eff2);
  const std::vector<complexd> u_full = {p1.h * s1, p1.v * s1, p1.h * s1, p1.v * s1,
                                        p1.h * r1, p1.v * r1, 0.0,      0.0};
  const std::vector<complexd> v_full = {p2.h * s2,  p2.v * s2,  -p2.h * s2, -p2.v * s2,
                                        0.0,        0.0,        p2.h * r2,  p2.v * r2};

  // q[U]: probability that every detector in subset U sees zero photons.
  std::array<double, 16> q{};
  for (unsigned subset = 0; subset < 16; ++subset) {
    std::vector<complexd> u, v;
    for (int mode = 0; mode < 8; ++mode) {
      if (mode < 4 && (subset >> mode & 1u)) continue;
      u.push_back(u_full[mode]);
      v.push_back(v_full[mode]);
    }
    q[subset] = vacuum_projection(u, v, k, l);
  }

  // Inclusion-exclusion: photonic pattern = exactly the detectors in `mask`.
  std::array<double, 16> photonic{};
  for (unsigned mask = 0; mask < 16; ++mask) {
    const unsigned complement = ~mask & 0xFu;
    double prob = 0.0;
    for (unsigned w = mask;; w = (w - 1) & mask) {
      const int bits = std::popcount(w);
      prob += ((bits % 2 == 0) ? 1.0 : -1.0) * q[complement | w];
      if (w == 0) break;
    }
    photonic[mask] = std::max(0.0, prob);
  }

  // Dark counts fill in extra clicks independently.
  const double d = channel.dark_count_prob;
  PatternDistribution dist;
  dist.pattern.fill(0.0);
  for (unsigned observed = 0; observed < 16; ++observed) {
    double prob = 0.0;
    for (unsigned s = observed;; s = (s - 1) & observed) {
      const int darks = std::popcount(observed & ~s);
      const int quiet = 4 - std::popcount(observed);
      prob += photonic[s] * std::pow(d, darks) * std::pow(1.0 - d, quiet);
      if (s == 0) break;
    }
    dist.pattern[observed] = prob;
  }

  dist.p_plus = dist.pattern[kPsiPlusA] + dist.pattern[kPsiPlusB];
  dist.p_minus = dist.pattern[kPsiMinusA] + dist.pattern[kPsiMinusB];
  dist.p_inconclusive = 1.0 - dist.p_plus - dist.p_minus;
  return dist;
}

BsmOutcome fock_bsm(const PulsePair& pulse, const ChannelModel& channel, RngStream& rng,
                    int max_total_photons) {
  if (!pulse.photons) throw std::invalid_argument("fock_bsm: pulse carries no photon numbers");
  if (pulse.phases) throw std::invalid_argument("fock_bsm: pulse carries coherent phases");
  const auto [k, l] = *pulse.photons;
  if (k + l > max_total_photons)
    throw std::invalid_argument("fock_bsm: photon total above cutoff");
  if (pulse.state_v1.basis != pulse.state_v2.basis)
    throw std::invalid_argument("fock_bsm: verifiers share the basis choice");
  const auto dist = fock_pattern_distribution(pulse.state_v1.basis, pulse.state_v1.bit,
                                              pulse.state_v2.bit, k, l, channel);
  return outcome_from_mask(dist.sample_mask(rng));
}

FockBsmTable::FockBsmTable(const ChannelModel& channel, int cutoff_total_photons)
    : cutoff_(cutoff_total_photons) {
  if (cutoff_ < 1 || cutoff_ > 40)
    throw std::invalid_argument("FockBsmTable: cutoff must be in [1, 40]");
  const std::size_t per_context = static_cast<std::size_t>(cutoff_ + 1) * (cutoff_ + 1);
  table_.resize(8 * per_context);
  for (int b = 0; b < 2; ++b)
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y)
        for (int k = 0; k <= cutoff_; ++k)
          for (int l = 0; k + l <= cutoff_; ++l)
            table_[index(b, x, y, k, l)] = fock_pattern_distribution(b, x, y, k, l, channel);
}

std::size_t FockBsmTable::index(int b, int x, int y, int k, int l) const {
  const std::size_t per_context = static_cast<std::size_t>(cutoff_ + 1) * (cutoff_ + 1);
  const std::size_t context = static_cast<std::size_t>((b << 2) | (x << 1) | y);
  return context * per_context + static_cast<std::size_t>(k) * (cutoff_ + 1) + l;
}

const PatternDistribution& FockBsmTable::distribution(int b, int x, int y, int k, int l) const {
  if (k < 0 || l < 0 || k + l > cutoff_)
    throw std::out_of_range("FockBsmTable: photon numbers outside cutoff");
  return table_[index(b, x, y, k, l)];
}

GainError expected_gain_error(double u, double v, const ChannelModel& channel) {
  channel.validate();
  if (u < 0.0 || v < 0.0)
    throw std::invalid_argument("expected_gain_error: intensities must be >= 0");

  // Click probabilities depend on the phases only through their difference, so
  // a single relative-phase integral suffices.
  auto average = [&](int points) {
    double gain = 0.0, error = 0.0;
    for (int b = 0; b < 2; ++b)
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) {
          PulsePair pulse{{b, x}, {b, y}, u, v, std::nullopt, std::nullopt};
          for (int i = 0; i < points; ++i) {
            const double phase = 2.0 * std::numbers::pi * (i + 0.5) / points;
            const complexd alpha1 = std::sqrt(u) * std::polar(1.0, phase);
            const complexd alpha2 = std::sqrt(v);
            const auto amps = detector_amplitudes(pulse, channel, alpha1, alpha2);
            const auto p = click_probabilities(amps, channel.dark_count_prob);
            double p_plus = 0.0, p_minus = 0.0;
            for (unsigned mask : {kPsiPlusA, kPsiPlusB, kPsiMinusA, kPsiMinusB}) {
              double prob = 1.0;
              for (int det = 0; det < 4; ++det)
                prob *= (mask >> det & 1u) ? p[det] : 1.0 - p[det];
              if (classify_click_mask(mask) == BsmValue::psi_plus)
                p_plus += prob;
              else
                p_minus += prob;
            }
            gain += p_plus + p_minus;
            error += ((x ^ y) == 0) ? p_minus : p_plus;
          }
        }
    const double norm = 8.0 * points;
    return std::pair<double, double>{gain / norm, error / norm};
  };

  int points = 64;
  auto [gain, error] = average(points);
  for (int refine = 0; refine < 8; ++refine) {
    points *= 2;
    const auto [g2, e2] = average(points);
    const bool converged = std::abs(g2 - gain) < 1e-10 && std::abs(e2 - error) < 1e-10;
    gain = g2;
    error = e2;
    if (converged) break;
  }
  GainError out;
  out.gain = gain;
  out.error_rate = (gain > 0.0) ? error / gain : 0.0;
  return out;
}

}  // namespace qpv
