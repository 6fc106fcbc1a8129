#include "qpv/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace qpv {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view module_tag,
                          std::uint64_t index) {
  std::uint64_t state = master ^ fnv1a(module_tag);
  std::uint64_t mixed = splitmix64(state);
  state ^= index;
  mixed ^= splitmix64(state);
  return splitmix64(mixed);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RngStream::below: n must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

int RngStream::poisson(double mean) {
  if (mean < 0.0) throw std::invalid_argument("RngStream::poisson: negative mean");
  if (mean == 0.0) return 0;
  const double u = uniform();
  double p = std::exp(-mean);
  double cum = p;
  int k = 0;
  while (u >= cum && k < 1000) {
    ++k;
    p *= mean / k;
    cum += p;
  }
  return k;
}

int RngStream::from_cdf(std::span<const double> cdf) {
  const double u = uniform();
  for (std::size_t i = 0; i + 1 < cdf.size(); ++i) {
    if (u < cdf[i]) return static_cast<int>(i);
  }
  return static_cast<int>(cdf.size()) - 1;
}

}  // namespace qpv
