#pragma once

// PHY/MAC constants, Access Category parameters, Two-Level aggregation
// geometry and the OFDM airtime of an A-MPDU.

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "rdgoodput/units.hpp"

namespace rdgoodput {

inline constexpr std::int64_t kMsduSubframeHeader = 14;
inline constexpr std::int64_t kMacDelimiter = 4;
inline constexpr std::int64_t kMacHeader = 28;
inline constexpr std::int64_t kFcs = 4;
inline constexpr std::int64_t kMaxMpduBytes = 11454;
inline constexpr std::int64_t kMaxAmpduBytes = 1048575;
inline constexpr std::int64_t kMaxMpdusPerAmpdu = 64;

// TCP segment sizes of the traffic model: 1480 B of TCP payload in a 1500 B
// IP datagram; a TCP Ack MSDU is 48 B (TCP + IP headers + LLC/SNAP).
inline constexpr std::int64_t kTcpDataPayload = 1480;
inline constexpr std::int64_t kDataMsduLen = 1500;
inline constexpr std::int64_t kAckMsduLen = 48;

struct PhyProfile {
  Duration slot_time = Duration::micros(9);
  Duration sifs = Duration::micros(16);
  Duration preamble = Duration::micros(48);
  Duration t_sym = Duration::micros(4);
  std::int64_t bits_per_symbol_factor = 4;
  Rate data_rate = Rate::mbps_tenths(12999);
  Duration back_time = Duration::micros(32);
  Duration ack_time = Duration::micros(28);
  Duration cf_end_time = Duration::micros(26);
  // Ack duration at the lowest basic rate (6 Mbps), used only for EIFS.
  Duration eifs_ack_time = Duration::micros(44);
  std::int64_t service_tail_bits = 22;

  void validate() const {
    const Duration zero{};
    if (slot_time <= zero || sifs <= zero || preamble <= zero || t_sym <= zero ||
        back_time <= zero || ack_time <= zero || cf_end_time <= zero || eifs_ack_time <= zero)
      throw std::invalid_argument("PhyProfile: all durations must be positive");
    if (data_rate.tenth_mbps <= 0) throw std::invalid_argument("PhyProfile: data_rate must be positive");
    if (bits_per_symbol_factor <= 0) throw std::invalid_argument("PhyProfile: bits_per_symbol_factor must be positive");
    if (service_tail_bits < 0) throw std::invalid_argument("PhyProfile: service_tail_bits must be >= 0");
  }

  friend bool operator==(const PhyProfile&, const PhyProfile&) = default;
};

enum class AccessCategory { BK, BE, VI, VO };
enum class Role { AP, Station };

inline constexpr std::array<AccessCategory, 4> kAllAccessCategories{
    AccessCategory::BK, AccessCategory::BE, AccessCategory::VI, AccessCategory::VO};

inline std::string_view to_string(AccessCategory ac) {
  switch (ac) {
    case AccessCategory::BK: return "BK";
    case AccessCategory::BE: return "BE";
    case AccessCategory::VI: return "VI";
    case AccessCategory::VO: return "VO";
  }
  return "?";
}

inline std::string_view to_string(Role r) { return r == Role::AP ? "AP" : "STA"; }

inline AccessCategory parse_access_category(std::string_view s) {
  auto upper = [](char c) { return static_cast<char>(std::toupper(static_cast<unsigned char>(c))); };
  for (auto ac : kAllAccessCategories) {
    const auto name = to_string(ac);
    if (std::equal(name.begin(), name.end(), s.begin(), s.end(), [&](char a, char b) { return a == upper(b); }))
      return ac;
  }
  throw std::invalid_argument("unknown access category '" + std::string(s) + "'");
}

struct AcParams {
  AccessCategory ac = AccessCategory::BE;
  Role role = Role::AP;
  std::int64_t cw_min = 16;
  std::int64_t cw_max = 1024;
  std::int64_t aifsn = 3;
  Duration aifs{};
  Duration eifs{};

  friend bool operator==(const AcParams&, const AcParams&) = default;
};

// The contention parameters of both ends of the TCP connection.
struct AcPair {
  AcParams ap;
  AcParams station;

  friend bool operator==(const AcPair&, const AcPair&) = default;
};

// WFA default EDCA values for the station and the AP: CW_min, CW_max, AIFSN
// and the nominal AIFS/EIFS in microseconds.
struct AcTableRow {
  std::int64_t cw_min;
  std::int64_t cw_max;
  std::int64_t aifsn;
  std::int64_t aifs_us;
  std::int64_t eifs_us;
};

inline constexpr AcTableRow table_literal(AccessCategory ac, Role role) {
  const bool ap = role == Role::AP;
  switch (ac) {
    case AccessCategory::BK: return {16, 1024, 7, 79, 139};
    case AccessCategory::BE: return ap ? AcTableRow{16, 64, 3, 43, 103} : AcTableRow{16, 1024, 3, 43, 103};
    case AccessCategory::VI: return ap ? AcTableRow{8, 16, 1, 25, 83} : AcTableRow{8, 16, 2, 34, 94};
    case AccessCategory::VO: return ap ? AcTableRow{4, 8, 1, 25, 83} : AcTableRow{4, 8, 2, 34, 94};
  }
  return {0, 0, 0, 0, 0};
}

/// AIFS[AC] = SIFS + AIFSN * SlotTime.
inline constexpr Duration aifs_for(std::int64_t aifsn, const PhyProfile& phy) {
  return phy.sifs + phy.slot_time * aifsn;
}

/// EIFS[AC] = SIFS + AckTime(6 Mbps) + AIFS[AC].
inline constexpr Duration eifs_for(Duration aifs, const PhyProfile& phy) {
  return phy.sifs + phy.eifs_ack_time + aifs;
}

// AIFS and EIFS are always derived from the PHY timings. With the default PHY
// they match the nominal values, except the VI/VO AP EIFS: nominal 83 us,
// derived SIFS + Ack + AIFS = 16 + 44 + 25 = 85 us.
inline AcParams ac_table(AccessCategory ac, Role role, const PhyProfile& phy = {}) {
  const auto row = table_literal(ac, role);
  AcParams p;
  p.ac = ac;
  p.role = role;
  p.cw_min = row.cw_min;
  p.cw_max = row.cw_max;
  p.aifsn = row.aifsn;
  p.aifs = aifs_for(row.aifsn, phy);
  p.eifs = eifs_for(p.aifs, phy);
  return p;
}

inline AcPair ac_pair(AccessCategory ac, const PhyProfile& phy = {}) {
  return {ac_table(ac, Role::AP, phy), ac_table(ac, Role::Station, phy)};
}

// ---------------------------------------------------------------------------
// Aggregation geometry

/// Length of an MSDU inside an A-MSDU: 14 B subframe header, padded to 4 B.
inline constexpr std::int64_t pad_msdu(std::int64_t msdu_len) {
  if (msdu_len <= 0) throw std::invalid_argument("pad_msdu: MSDU length must be positive");
  return 4 * ((msdu_len + kMsduSubframeHeader + 3) / 4);
}

/// Per-MPDU overhead H: delimiter, MAC header and FCS rounded up to 4 B.
inline constexpr std::int64_t mpdu_overhead() {
  return 4 * ((kMacDelimiter + kMacHeader + kFcs + 3) / 4);
}

/// Number of padded MSDUs that fit one MPDU under the 11454 B cap.
inline constexpr std::int64_t msdu_capacity(std::int64_t padded_msdu_len) {
  if (padded_msdu_len <= 0) throw std::invalid_argument("msdu_capacity: padded length must be positive");
  return (kMaxMpduBytes - mpdu_overhead()) / padded_msdu_len;
}

/// PSDU length of an A-MPDU with `mpdus` MPDUs carrying `msdus` MSDUs in total.
inline constexpr std::int64_t ampdu_len(std::int64_t mpdus, std::int64_t msdus, std::int64_t padded_msdu_len) {
  return mpdus * mpdu_overhead() + msdus * padded_msdu_len;
}

struct FrameGeometry {
  std::int64_t msdu_len = 0;
  std::int64_t padded_msdu_len = 0;
  std::int64_t mpdu_overhead = 0;
  std::int64_t msdus_per_mpdu = 0;
  std::int64_t mpdu_cap_bytes = kMaxMpduBytes;
  std::int64_t max_mpdus = kMaxMpdusPerAmpdu;

  /// Len = K*H + Y*L'.
  std::int64_t ampdu_len(std::int64_t mpdus, std::int64_t msdus) const {
    return rdgoodput::ampdu_len(mpdus, msdus, padded_msdu_len);
  }
  /// Bytes of one MPDU carrying `msdus` MSDUs.
  std::int64_t mpdu_len(std::int64_t msdus) const { return mpdu_overhead + msdus * padded_msdu_len; }
};

inline FrameGeometry frame_geometry(std::int64_t msdu_len) {
  FrameGeometry g;
  g.msdu_len = msdu_len;
  g.padded_msdu_len = pad_msdu(msdu_len);
  g.mpdu_overhead = mpdu_overhead();
  g.msdus_per_mpdu = msdu_capacity(g.padded_msdu_len);
  return g;
}

inline const FrameGeometry& data_geometry() {
  static const FrameGeometry g = frame_geometry(kDataMsduLen);
  return g;
}

inline const FrameGeometry& ack_geometry() {
  static const FrameGeometry g = frame_geometry(kAckMsduLen);
  return g;
}

/// Symbol-rounded on-air time of a PSDU of `len` bytes:
/// TSym * ceil((8*len + 22) / (BitsPerSymbol * R)).
/// Computed in integers (R in 0.1 Mbps) so the ceiling is exact.
inline Duration ampdu_airtime(std::int64_t len, const PhyProfile& phy) {
  if (len <= 0) throw std::invalid_argument("ampdu_airtime: length must be positive");
  const std::int64_t num = (8 * len + phy.service_tail_bits) * 10;
  const std::int64_t den = phy.bits_per_symbol_factor * phy.data_rate.tenth_mbps;
  const std::int64_t symbols = (num + den - 1) / den;
  return phy.t_sym * symbols;
}

}  // namespace rdgoodput
