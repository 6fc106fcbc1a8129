#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace qpv {

// Deterministic stream derivation: every consumer of randomness owns a stream
// derived from (master seed, module tag, index). mt19937_64 is fully specified
// by the standard, so the raw engine output is portable; the distribution
// helpers below are hand-rolled for the same reason.
std::uint64_t derive_seed(std::uint64_t master, std::string_view module_tag,
                          std::uint64_t index = 0);

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  int bit() { return static_cast<int>(engine_() >> 63); }

  bool bernoulli(double p) { return uniform() < p; }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  // Inversion sampler; adequate for the small means used here (mu <= ~30).
  int poisson(double mean);

  // Index into a cumulative distribution (cdf.back() ~= 1).
  int from_cdf(std::span<const double> cdf);

 private:
  std::mt19937_64 engine_;
};

}  // namespace qpv
