#pragma once

// Bit-error channel with independent bit errors: an MPDU of B bits fails with
// probability 1 - (1 - BER)^B.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace rdgoodput {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// MT19937-64 seeded through SplitMix64. Child streams are derived with
// split(id): seed' = splitmix64(seed ^ splitmix64(id + 1)), so every simulated
// entity draws from its own reproducible stream. Uniform variates are built
// from raw 64-bit outputs rather than <random> distributions, whose algorithms
// are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(splitmix64(seed)) {}

  std::uint64_t seed() const { return seed_; }

  Rng split(std::uint64_t stream) const { return Rng(seed_ ^ splitmix64(stream + 1)); }

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: empty range");
    const std::uint64_t limit = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next();
      if (r >= limit) return r % n;
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// p = 1 - (1 - BER)^bits.
inline double mpdu_failure_prob(std::int64_t bits, double ber) {
  if (bits < 0) throw std::invalid_argument("mpdu_failure_prob: negative bit count");
  if (ber < 0.0 || ber >= 1.0) throw std::invalid_argument("mpdu_failure_prob: BER must be in [0, 1)");
  if (bits == 0 || ber == 0.0) return 0.0;
  return -std::expm1(static_cast<double>(bits) * std::log1p(-ber));
}

class BerChannel {
 public:
  BerChannel(double ber, std::uint64_t seed) : ber_(ber), rng_(seed) {
    if (ber < 0.0 || ber >= 1.0) throw std::invalid_argument("BerChannel: BER must be in [0, 1)");
  }
  BerChannel(double ber, Rng rng) : ber_(ber), rng_(rng) {
    if (ber < 0.0 || ber >= 1.0) throw std::invalid_argument("BerChannel: BER must be in [0, 1)");
  }

  double ber() const { return ber_; }

  /// Sends `copies` copies of a `bits`-long MPDU; true if any copy survives.
  /// An error-free channel consumes no random numbers.
  bool sample_mpdu(std::int64_t bits, int copies = 1) {
    if (copies < 1 || copies > 2) throw std::invalid_argument("sample_mpdu: copies must be 1 or 2");
    if (ber_ == 0.0) return true;
    const double p = mpdu_failure_prob(bits, ber_);
    for (int c = 0; c < copies; ++c)
      if (rng_.uniform01() >= p) return true;
    return false;
  }

 private:
  double ber_;
  Rng rng_;
};

}  // namespace rdgoodput
