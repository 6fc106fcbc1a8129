#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpv/quantum.hpp"
#include "qpv/rng.hpp"

namespace qpv {

// Lossy, noisy channel + detection stack for the linear-optics BSM.
// transmittance_* are per-arm channel transmittances (linear, excluding the
// detectors); the intrinsic BSM loss of -10 log10(0.5 det_eff^2) comes out of
// the click statistics themselves.
struct ChannelModel {
  double transmittance_v1 = 1.0;
  double transmittance_v2 = 1.0;
  double misalignment_error = 0.001;  // probability-equivalent polarization error
  double detector_efficiency = 0.64;
  double dark_count_prob = 2.5e-6;  // per detector per gate

  void validate() const;

  // Intrinsic BSM loss at zero channel loss: 3 dB (two-Bell-state coverage)
  // plus the two detector efficiencies.
  double bsm_intrinsic_loss_db() const;

  // Relative polarization rotation between the arms (applied to arm 2).
  // Calibrated as sin^2(theta) = 2 * misalignment_error so the (1,1)-sector
  // QBER at zero loss equals misalignment_error exactly: the rotation causes
  // errors only in X-basis rounds (circular states are rotation eigenstates),
  // at conditional rate sin^2(theta), and the basis choice is uniform.
  double misalignment_rotation() const;

  // Same detector stack, with the per-arm transmittances chosen so the total
  // loss (channel + intrinsic BSM) equals overall_db, split evenly per arm.
  ChannelModel with_overall_loss_db(double overall_db) const;

  // Flat key-value document: transmittance_db, misalignment, det_eff, dark_count.
  static ChannelModel from_kv_text(const std::string& text);
  static ChannelModel from_kv_file(const std::string& path);
  std::string to_kv_text() const;
};

struct PulsePair {
  BasisBit state_v1, state_v2;
  double intensity_v1 = 0.0, intensity_v2 = 0.0;
  std::optional<std::pair<double, double>> phases;   // coherent backend
  std::optional<std::pair<int, int>> photons;        // Fock backend
};

enum class BsmValue { psi_plus, psi_minus, inconclusive };

// Detector indices within click masks: bit 0 = D1H, 1 = D1V, 2 = D2H, 3 = D2V.
struct BsmOutcome {
  BsmValue value = BsmValue::inconclusive;
  std::array<bool, 4> clicks{};

  Outcome outcome() const {
    switch (value) {
      case BsmValue::psi_plus: return Outcome::zero;
      case BsmValue::psi_minus: return Outcome::one;
      default: return Outcome::inconclusive;
    }
  }
};

// psi_minus iff exactly {D1H, D2V} or {D1V, D2H}; psi_plus iff exactly
// {D1H, D1V} or {D2H, D2V}; anything else is inconclusive.
BsmValue classify_click_mask(unsigned mask);
BsmOutcome outcome_from_mask(unsigned mask);

// Polarization amplitudes (c_H, c_V) of the BB84 state (basis, bit).
std::array<complexd, 2> bb84_polarization(int basis, int bit);

// Ideal single-photon BSM: x = y gives Psi+ with probability 1/2, x != y gives
// Psi- with probability 1/2, inconclusive otherwise; independent of basis.
BsmOutcome ideal_bsm_single_photon(int b, int x, int y, RngStream& rng);

// Coherent pulses through the 50:50 + PBS network, threshold detectors with
// independent dark counts. If pulse.phases is unset the two phases are drawn
// uniformly (phase randomization).
BsmOutcome coherent_bsm(const PulsePair& pulse, const ChannelModel& channel, RngStream& rng);

// Detector-plane amplitudes [D1H, D1V, D2H, D2V] for the given phases; the sum
// of |amplitude|^2 equals u*t1*eff + v*t2*eff (the network is unitary).
std::array<complexd, 4> coherent_detector_amplitudes(const PulsePair& pulse,
                                                     const ChannelModel& channel, double phase1,
                                                     double phase2);

// Exact click-pattern distribution over the 16 detector masks.
struct PatternDistribution {
  std::array<double, 16> pattern{};  // indexed by click mask
  double p_plus = 0.0, p_minus = 0.0, p_inconclusive = 1.0;

  unsigned sample_mask(RngStream& rng) const;
  Outcome sample_outcome(RngStream& rng) const;
};

// Exact multimode Fock evolution of (k, l) photons with the given
// polarizations; loss, misalignment and dark counts included.
PatternDistribution fock_pattern_distribution(int b, int x, int y, int k, int l,
                                              const ChannelModel& channel);

// One-shot Fock-backend sample. photons_v1 + photons_v2 must not exceed
// max_total_photons.
BsmOutcome fock_bsm(const PulsePair& pulse, const ChannelModel& channel, RngStream& rng,
                    int max_total_photons = 10);

// Precomputed Fock distributions for every (b, x, y, k, l) with k + l <= cutoff;
// read-only after construction, safe to share across workers.
class FockBsmTable {
 public:
  FockBsmTable(const ChannelModel& channel, int cutoff_total_photons);

  const PatternDistribution& distribution(int b, int x, int y, int k, int l) const;
  int cutoff() const { return cutoff_; }

 private:
  int cutoff_;
  std::vector<PatternDistribution> table_;
  std::size_t index(int b, int x, int y, int k, int l) const;
};

struct GainError {
  double gain = 0.0;        // Q^{u,v}: probability of a conclusive outcome
  double error_rate = 0.0;  // E^{u,v}: conditional error probability
};

// Deterministic phase-averaged gain and error rate for intensity pair (u, v):
// the coherent click probabilities are integrated over the relative phase with
// midpoint quadrature, refined until successive refinements differ < 1e-10.
GainError expected_gain_error(double u, double v, const ChannelModel& channel);

}  // namespace qpv
