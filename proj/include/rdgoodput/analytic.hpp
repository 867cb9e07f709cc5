#pragma once

// Closed-form error-free goodput of the Reverse Direction scheme RD(n): the
// AP wins the channel once per TXOP, sends n A-MPDUs of K_D MPDUs each, and
// grants the station one A-MPDU of TCP Acks before closing with CF-End.

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdgoodput/frames.hpp"
#include "rdgoodput/units.hpp"

namespace rdgoodput {

struct RdConfig {
  AcPair ac = ac_pair(AccessCategory::BE);
  std::int64_t k_d = 64;
  std::int64_t n = 1;
  std::int64_t delayed_acks = 1;
  std::int64_t data_msdu_len = kDataMsduLen;
  std::int64_t ack_msdu_len = kAckMsduLen;
  std::int64_t tcp_payload = kTcpDataPayload;

  std::int64_t data_msdus_per_mpdu() const { return msdu_capacity(pad_msdu(data_msdu_len)); }
  std::int64_t ack_msdus_per_mpdu() const { return msdu_capacity(pad_msdu(ack_msdu_len)); }

  /// Data segments sent per TXOP.
  std::int64_t segments() const { return n * k_d * data_msdus_per_mpdu(); }

  /// The station can return at most 64 MPDUs of Acks, each Ack covering d segments.
  std::int64_t segment_cap() const { return delayed_acks * kMaxMpdusPerAmpdu * ack_msdus_per_mpdu(); }

  void validate() const {
    if (k_d < 1 || k_d > kMaxMpdusPerAmpdu)
      throw std::invalid_argument("RdConfig: k_d must be in [1, 64], got " + std::to_string(k_d));
    if (n < 1) throw std::invalid_argument("RdConfig: n must be >= 1, got " + std::to_string(n));
    if (delayed_acks != 1 && delayed_acks != 2)
      throw std::invalid_argument("RdConfig: delayed_acks must be 1 or 2");
    if (segments() > segment_cap())
      throw std::invalid_argument("RdConfig: n*k_d*" + std::to_string(data_msdus_per_mpdu()) + " = " +
                                  std::to_string(segments()) + " exceeds the receiver cap " +
                                  std::to_string(segment_cap()));
  }
};

struct CycleBreakdown {
  Duration c_overhead{};    // AIFS + BO + SIFS + CF-End + Preamble
  Duration t_ap{};          // one AP A-MPDU
  Duration t_sta{};         // the station's A-MPDU
  Duration per_ap_tx{};     // Preamble + T(AP) + SIFS + BAck + SIFS
  Duration station_tail{};  // T(STA) + SIFS + BAck
  std::int64_t n = 0;
  std::int64_t k_a = 0;
  std::int64_t ack_msdus = 0;
  Duration cycle{};
  double goodput = 0.0;  // Mbps
};

/// Expected backoff of a collision-free contention: (CW_min - 1) / 2 slots.
inline Duration mean_backoff(const AcParams& p, const PhyProfile& phy) {
  return Duration::tenths((p.cw_min - 1) * phy.slot_time.tenths() / 2);
}

inline Duration txop_overhead(const AcParams& ap, const PhyProfile& phy) {
  return ap.aifs + mean_backoff(ap, phy) + phy.sifs + phy.cf_end_time + phy.preamble;
}

inline Duration t_ap(const RdConfig& cfg, const PhyProfile& phy) {
  cfg.validate();
  const auto g = frame_geometry(cfg.data_msdu_len);
  return ampdu_airtime(g.ampdu_len(cfg.k_d, cfg.k_d * g.msdus_per_mpdu), phy);
}

/// TCP Ack MSDUs the station returns for a TXOP; an odd remainder under
/// delayed Acks gets its own Ack.
inline std::int64_t ack_msdus(const RdConfig& cfg) {
  return (cfg.segments() + cfg.delayed_acks - 1) / cfg.delayed_acks;
}

inline std::int64_t ack_mpdus(const RdConfig& cfg) {
  const auto per = cfg.ack_msdus_per_mpdu();
  return (ack_msdus(cfg) + per - 1) / per;
}

inline Duration t_sta(const RdConfig& cfg, const PhyProfile& phy) {
  cfg.validate();
  const auto g = frame_geometry(cfg.ack_msdu_len);
  return ampdu_airtime(g.ampdu_len(ack_mpdus(cfg), ack_msdus(cfg)), phy);
}

inline CycleBreakdown cycle(const RdConfig& cfg, const PhyProfile& phy) {
  cfg.validate();
  CycleBreakdown b;
  b.n = cfg.n;
  b.c_overhead = txop_overhead(cfg.ac.ap, phy);
  b.t_ap = t_ap(cfg, phy);
  b.t_sta = t_sta(cfg, phy);
  b.k_a = ack_mpdus(cfg);
  b.ack_msdus = ack_msdus(cfg);
  b.per_ap_tx = phy.preamble + b.t_ap + phy.sifs + phy.back_time + phy.sifs;
  b.station_tail = b.t_sta + phy.sifs + phy.back_time;
  b.cycle = b.c_overhead + b.per_ap_tx * cfg.n + b.station_tail;
  b.goodput = mbps(static_cast<double>(cfg.segments() * cfg.tcp_payload * 8), b.cycle);
  return b;
}

/// Goodput with the symbol rounding of T(AP), T(STA) and K_A dropped.
inline double goodput_closed_form(const RdConfig& cfg, const PhyProfile& phy) {
  cfg.validate();
  const auto data = frame_geometry(cfg.data_msdu_len);
  const auto ack = frame_geometry(cfg.ack_msdu_len);
  const double r = phy.data_rate.mbps();
  const double n = static_cast<double>(cfg.n);
  const double kd = static_cast<double>(cfg.k_d);
  const double y = static_cast<double>(data.msdus_per_mpdu);
  const double h = static_cast<double>(data.mpdu_overhead);
  const double tail = static_cast<double>(phy.service_tail_bits);
  const double acks = n * kd * y / static_cast<double>(cfg.delayed_acks);
  const double k_a = acks / static_cast<double>(ack.msdus_per_mpdu);

  const double fixed = (txop_overhead(cfg.ac.ap, phy) + phy.sifs + phy.back_time).us() +
                       n * (phy.preamble + phy.sifs * 2 + phy.back_time).us();
  const double ap_air = (n * kd * (static_cast<double>(data.padded_msdu_len) * y + h) * 8.0 + tail) / r;
  const double sta_air = ((acks * static_cast<double>(ack.padded_msdu_len) + k_a * h) * 8.0 + tail) / r;
  return n * kd * y * static_cast<double>(cfg.tcp_payload) * 8.0 / (fixed + ap_air + sta_air);
}

/// Largest n with n*K_D*7 <= d*64*178.
inline std::int64_t n_max(std::int64_t k_d, std::int64_t delayed_acks = 1) {
  if (k_d < 1 || k_d > kMaxMpdusPerAmpdu) throw std::invalid_argument("n_max: k_d must be in [1, 64]");
  if (delayed_acks != 1 && delayed_acks != 2) throw std::invalid_argument("n_max: delayed_acks must be 1 or 2");
  const auto per_data = data_geometry().msdus_per_mpdu;
  const auto per_ack = ack_geometry().msdus_per_mpdu;
  return delayed_acks * per_ack * kMaxMpdusPerAmpdu / (per_data * k_d);
}

struct TxopPoint {
  std::int64_t segments = 0;
  Duration txop{};
  double goodput = 0.0;
};

/// Cycle of a TXOP that delivers `segments` Data segments packed as densely as
/// possible: full 64-MPDU transmissions of 7-MSDU MPDUs, remainder last.
inline TxopPoint pack_segments(std::int64_t segments, const AcParams& ap, const PhyProfile& phy,
                               std::int64_t delayed_acks) {
  const auto& data = data_geometry();
  const auto& ack = ack_geometry();
  const std::int64_t mpdus = (segments + data.msdus_per_mpdu - 1) / data.msdus_per_mpdu;

  Duration total = txop_overhead(ap, phy);
  std::int64_t left_mpdus = mpdus;
  std::int64_t left_msdus = segments;
  while (left_mpdus > 0) {
    const std::int64_t k = std::min(left_mpdus, kMaxMpdusPerAmpdu);
    const std::int64_t y = std::min(left_msdus, k * data.msdus_per_mpdu);
    total += phy.preamble + ampdu_airtime(data.ampdu_len(k, y), phy) + phy.sifs + phy.back_time + phy.sifs;
    left_mpdus -= k;
    left_msdus -= y;
  }
  const std::int64_t acks = (segments + delayed_acks - 1) / delayed_acks;
  const std::int64_t k_a = (acks + ack.msdus_per_mpdu - 1) / ack.msdus_per_mpdu;
  total += ampdu_airtime(ack.ampdu_len(k_a, acks), phy) + phy.sifs + phy.back_time;

  return {segments, total, mbps(static_cast<double>(segments * kTcpDataPayload * 8), total)};
}

/// Pareto frontier of goodput versus TXOP length over the given segment
/// counts: for every TXOP length on the frontier no shorter TXOP does better.
inline std::vector<TxopPoint> max_goodput_vs_txop(const AcParams& ap, const PhyProfile& phy,
                                                  std::int64_t delayed_acks,
                                                  std::span<const std::int64_t> segment_grid) {
  if (segment_grid.empty()) throw std::invalid_argument("max_goodput_vs_txop: empty segment grid");
  if (delayed_acks != 1 && delayed_acks != 2)
    throw std::invalid_argument("max_goodput_vs_txop: delayed_acks must be 1 or 2");
  const std::int64_t cap = delayed_acks * kMaxMpdusPerAmpdu * ack_geometry().msdus_per_mpdu;

  std::vector<TxopPoint> pts;
  pts.reserve(segment_grid.size());
  for (auto s : segment_grid) {
    if (s < 1 || s > cap)
      throw std::invalid_argument("max_goodput_vs_txop: segment count " + std::to_string(s) +
                                  " outside [1, " + std::to_string(cap) + "]");
    pts.push_back(pack_segments(s, ap, phy, delayed_acks));
  }
  std::sort(pts.begin(), pts.end(), [](const TxopPoint& a, const TxopPoint& b) {
    if (a.txop != b.txop) return a.txop < b.txop;
    return a.goodput > b.goodput;
  });

  std::vector<TxopPoint> frontier;
  for (const auto& p : pts)
    if (frontier.empty() || p.goodput > frontier.back().goodput) frontier.push_back(p);
  return frontier;
}

inline std::vector<std::int64_t> full_segment_grid(std::int64_t delayed_acks) {
  std::vector<std::int64_t> grid(static_cast<std::size_t>(delayed_acks * kMaxMpdusPerAmpdu *
                                                          ack_geometry().msdus_per_mpdu));
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = static_cast<std::int64_t>(i) + 1;
  return grid;
}

}  // namespace rdgoodput
