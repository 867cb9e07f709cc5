#pragma once

#include <compare>
#include <cstdint>
#include <ostream>

namespace rdgoodput {

// Fixed-point duration with 0.1 us resolution. Every timing constant of the
// model (9 us slots, 67.5 us mean backoff, 4 us symbols) is exact in tenths.
class Duration {
 public:
  constexpr Duration() = default;

  static constexpr Duration micros(std::int64_t us) { return Duration{us * 10}; }
  static constexpr Duration tenths(std::int64_t t) { return Duration{t}; }

  constexpr std::int64_t tenths() const { return tenths_; }
  constexpr double us() const { return static_cast<double>(tenths_) / 10.0; }

  constexpr Duration& operator+=(Duration o) { tenths_ += o.tenths_; return *this; }
  constexpr Duration& operator-=(Duration o) { tenths_ -= o.tenths_; return *this; }

  friend constexpr Duration operator+(Duration a, Duration b) { return Duration{a.tenths_ + b.tenths_}; }
  friend constexpr Duration operator-(Duration a, Duration b) { return Duration{a.tenths_ - b.tenths_}; }
  friend constexpr Duration operator*(Duration a, std::int64_t k) { return Duration{a.tenths_ * k}; }
  friend constexpr Duration operator*(std::int64_t k, Duration a) { return Duration{a.tenths_ * k}; }

  friend constexpr auto operator<=>(Duration, Duration) = default;

  friend std::ostream& operator<<(std::ostream& os, Duration d) {
    os << d.tenths_ / 10;
    if (d.tenths_ % 10 != 0) os << '.' << (d.tenths_ < 0 ? -d.tenths_ : d.tenths_) % 10;
    return os << "us";
  }

 private:
  constexpr explicit Duration(std::int64_t t) : tenths_(t) {}
  std::int64_t tenths_ = 0;
};

// PHY rate in units of 0.1 Mbps (1 Mbps == 1 bit/us), so 1299.9 Mbps is exact.
struct Rate {
  std::int64_t tenth_mbps = 0;

  static constexpr Rate mbps_tenths(std::int64_t t) { return Rate{t}; }
  constexpr double mbps() const { return static_cast<double>(tenth_mbps) / 10.0; }
  friend constexpr auto operator<=>(Rate, Rate) = default;
};

/// Bits per microsecond, i.e. Mbps.
inline double mbps(double bits, Duration elapsed) {
  return elapsed.tenths() > 0 ? bits / elapsed.us() : 0.0;
}

}  // namespace rdgoodput
