#pragma once

// Discrete-event simulation of one AP (TCP sender) and one station (TCP
// receiver) sharing the channel, either through back-to-back Reverse
// Direction TXOPs or through plain EDCA contention, over a bit-error channel
// with MAC ARQ in both directions.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rdgoodput/arq.hpp"
#include "rdgoodput/channel.hpp"
#include "rdgoodput/event_queue.hpp"
#include "rdgoodput/frames.hpp"
#include "rdgoodput/units.hpp"

namespace rdgoodput {

enum class OperationMode { RD, NoRD };
enum class Repetition { Off, First3Twice };
enum class BackoffPolicy { Redraw, Freeze };
enum class TimeCategory : std::size_t { Data = 0, Acks = 1, Overhead = 2, Collision = 3 };

inline constexpr std::size_t kTimeCategories = 4;
inline constexpr std::int64_t kRepeatedMpdus = 3;

inline std::string_view to_string(OperationMode m) { return m == OperationMode::RD ? "rd" : "nord"; }
inline std::string_view to_string(Repetition r) { return r == Repetition::Off ? "off" : "first3_twice"; }

struct SimConfig {
  OperationMode mode = OperationMode::RD;
  std::int64_t n = 1;  // AP transmissions per TXOP, RD only
  AcPair ac = ac_pair(AccessCategory::BE);
  std::int64_t k_d = 64;
  double ber = 0.0;
  Repetition repetition = Repetition::Off;
  std::int64_t delayed_acks = 1;
  std::optional<unsigned> retry_limit;  // unlimited when empty
  // Stop rule: `cycles` TXOPs (RD) or channel-access rounds (No-RD), else
  // the first boundary at or after `sim_time`; defaults to one second.
  std::optional<std::int64_t> cycles;
  std::optional<Duration> sim_time;
  double warmup_fraction = 0.05;
  std::uint64_t seed = 1;
  BackoffPolicy backoff = BackoffPolicy::Redraw;
  // Delivered segments the station may hold whose Acks have not yet reached
  // the AP; the TCP receiver discards Data beyond it. Unlimited when empty.
  std::optional<std::int64_t> station_backlog_cap;
  std::int64_t data_msdus_per_mpdu = data_geometry().msdus_per_mpdu;
  PhyProfile phy{};

  std::int64_t segment_cap() const {
    return delayed_acks * kMaxMpdusPerAmpdu * ack_geometry().msdus_per_mpdu;
  }

  void validate() const {
    phy.validate();
    if (k_d < 1 || k_d > kMaxMpdusPerAmpdu)
      throw std::invalid_argument("SimConfig: k_d must be in [1, 64], got " + std::to_string(k_d));
    if (delayed_acks != 1 && delayed_acks != 2) throw std::invalid_argument("SimConfig: delayed_acks must be 1 or 2");
    if (!(ber >= 0.0 && ber < 1.0)) throw std::invalid_argument("SimConfig: ber must be in [0, 1)");
    if (data_msdus_per_mpdu < 1 || data_msdus_per_mpdu > data_geometry().msdus_per_mpdu)
      throw std::invalid_argument("SimConfig: data_msdus_per_mpdu must be in [1, " +
                                  std::to_string(data_geometry().msdus_per_mpdu) + "]");
    if (mode == OperationMode::RD) {
      if (n < 1) throw std::invalid_argument("SimConfig: RD(n) needs n >= 1");
      if (n * k_d * data_msdus_per_mpdu > segment_cap())
        throw std::invalid_argument("SimConfig: n*k_d*" + std::to_string(data_msdus_per_mpdu) + " = " +
                                    std::to_string(n * k_d * data_msdus_per_mpdu) + " exceeds the receiver cap " +
                                    std::to_string(segment_cap()));
    }
    if (cycles && *cycles < 1) throw std::invalid_argument("SimConfig: cycles must be >= 1");
    if (sim_time && *sim_time <= Duration{}) throw std::invalid_argument("SimConfig: sim_time must be positive");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0))
      throw std::invalid_argument("SimConfig: warmup_fraction must be in [0, 1)");
    if (station_backlog_cap && *station_backlog_cap < 1)
      throw std::invalid_argument("SimConfig: station_backlog_cap must be >= 1");
    if (ac.ap.cw_min < 1 || ac.station.cw_min < 1) throw std::invalid_argument("SimConfig: CW_min must be >= 1");
  }
};

struct SimResult {
  double goodput = 0.0;  // Mbps over the measured window
  std::int64_t delivered_segments = 0;
  std::int64_t acked_segments = 0;
  std::int64_t discarded_segments = 0;
  std::int64_t collisions = 0;
  std::int64_t cycles = 0;
  std::int64_t ap_transmissions = 0;
  std::int64_t station_transmissions = 0;
  std::int64_t retransmissions = 0;
  std::int64_t dropped_mpdus = 0;
  double mean_txop = 0.0;  // us per TXOP (RD) or per channel-access round (No-RD)
  double mean_mpdus_per_tx = 0.0;
  Duration elapsed{};
  std::array<Duration, kTimeCategories> airtime{};

  Duration airtime_of(TimeCategory c) const { return airtime[static_cast<std::size_t>(c)]; }
  Duration airtime_total() const {
    Duration s{};
    for (auto d : airtime) s += d;
    return s;
  }
};

/// Goodput of `acked_segments` TCP Data segments credited over `elapsed`.
inline double account_goodput(std::int64_t acked_segments, Duration elapsed,
                              std::int64_t tcp_payload = kTcpDataPayload) {
  return mbps(static_cast<double>(acked_segments * tcp_payload * 8), elapsed);
}

namespace detail {

struct DataMpdu {
  std::int64_t segments = 0;
};

struct AckMpdu {
  std::int64_t msdus = 0;
  std::int64_t segments = 0;
  std::int64_t cumulative = 0;  // station's cumulative Ack point after this MPDU
};

enum class Party : std::uint8_t { AP = 1, Station = 2 };

enum class EvKind : std::uint8_t {
  BackoffEnd,
  ApTxStart,
  StaTxStart,
  ContendTxStart,
  ApFrameEnd,
  StaFrameEnd,
  CollisionEnd,
  ApBackEnd,
  StaBackEnd,
  CfEnd,
};

struct Ev {
  EvKind kind;
  TimeCategory category;  // what the interval ending at this event was spent on
  std::uint8_t parties = 0;
  std::uint64_t epoch = 0;
};

struct Counters {
  std::array<Duration, kTimeCategories> airtime{};
  std::int64_t delivered = 0;
  std::int64_t acked = 0;
  std::int64_t discarded = 0;
  std::int64_t collisions = 0;
  std::int64_t cycles = 0;
  std::int64_t ap_tx = 0;
  std::int64_t sta_tx = 0;
  std::int64_t ap_mpdus = 0;
  std::int64_t retransmissions = 0;
  std::int64_t dropped = 0;
};

template <typename Payload>
struct Frame {
  std::vector<SeqNo> seqs;
  std::vector<int> copies;
  Duration airtime{};
};

class Simulation {
 public:
  Simulation(const SimConfig& cfg, std::ostream* trace)
      : cfg_(cfg),
        phy_(cfg.phy),
        trace_(trace),
        backoff_ap_(Rng(cfg.seed).split(0)),
        backoff_sta_(Rng(cfg.seed).split(1)),
        data_channel_(cfg.ber, Rng(cfg.seed).split(2)),
        ack_channel_(cfg.ber, Rng(cfg.seed).split(3)),
        ap_window_(cfg.retry_limit),
        sta_window_(cfg.retry_limit),
        cw_ap_(cfg.ac.ap.cw_min),
        cw_sta_(cfg.ac.station.cw_min) {
    cfg_.validate();
    if (!cfg_.cycles && !cfg_.sim_time) cfg_.sim_time = Duration::micros(1'000'000);
    if (cfg_.cycles) {
      warmup_cycles_ = static_cast<std::int64_t>(cfg_.warmup_fraction * static_cast<double>(*cfg_.cycles));
    } else {
      warmup_time_ = Duration::tenths(
          static_cast<std::int64_t>(cfg_.warmup_fraction * static_cast<double>(cfg_.sim_time->tenths())));
    }
  }

  SimResult run() {
    maybe_open_window();
    if (cfg_.mode == OperationMode::RD)
      start_txop();
    else
      start_round(cfg_.ac.ap.aifs, cfg_.ac.station.aifs);

    while (!done_ && !queue_.empty()) {
      const auto e = queue_.pop();
      if (e.payload.kind == EvKind::BackoffEnd && e.payload.epoch != epoch_) continue;  // cancelled
      total_.airtime[static_cast<std::size_t>(e.payload.category)] += e.time - now_;
      now_ = e.time;
      dispatch(e.payload);
    }
    return result();
  }

 private:
  // -- shared helpers -------------------------------------------------------

  void trace(std::string_view kind, std::string_view actor, const std::string& detail) {
    if (trace_) *trace_ << now_.us() << ' ' << kind << ' ' << actor << ' ' << detail << '\n';
  }

  void schedule(Duration at, EventPriority prio, Ev ev) { queue_.push(at, prio, ev); }

  Duration backoff(std::int64_t slots) const { return phy_.slot_time * slots; }

  bool station_has_traffic() const { return sta_window_.outstanding() > 0 || sta_pending_ > 0; }

  std::optional<DataMpdu> fresh_data() { return DataMpdu{cfg_.data_msdus_per_mpdu}; }

  std::optional<AckMpdu> fresh_ack() {
    if (sta_pending_ == 0) return std::nullopt;
    const std::int64_t d = cfg_.delayed_acks;
    const std::int64_t per = ack_geometry().msdus_per_mpdu;
    AckMpdu m;
    m.segments = std::min(sta_pending_, per * d);
    m.msdus = (m.segments + d - 1) / d;
    sta_pending_ -= m.segments;
    sta_in_flight_ += m.segments;
    sta_cumulative_ += m.segments;
    m.cumulative = sta_cumulative_;
    return m;
  }

  Frame<DataMpdu> build_ap_frame() {
    Frame<DataMpdu> f;
    f.seqs = ap_window_.select_for_tx(static_cast<std::size_t>(cfg_.k_d), [this] { return fresh_data(); });
    const auto& g = data_geometry();
    std::int64_t bytes = 0;
    f.copies.resize(f.seqs.size(), 1);
    for (std::size_t i = 0; i < f.seqs.size(); ++i) {
      if (cfg_.repetition == Repetition::First3Twice && static_cast<std::int64_t>(i) < kRepeatedMpdus)
        f.copies[i] = 2;
      const auto& e = ap_window_.at(f.seqs[i]);
      bytes += f.copies[i] * g.mpdu_len(e.payload.segments);
      if (e.tx_count > 0) ++total_.retransmissions;
    }
    ap_window_.record_attempt(f.seqs);
    f.airtime = ampdu_airtime(bytes, phy_);
    ++total_.ap_tx;
    total_.ap_mpdus += static_cast<std::int64_t>(f.seqs.size());
    trace("tx", "AP", std::to_string(f.seqs.size()) + " mpdus " + std::to_string(f.airtime.us()) + "us");
    return f;
  }

  Frame<AckMpdu> build_sta_frame() {
    Frame<AckMpdu> f;
    f.seqs = sta_window_.select_for_tx(kMaxMpdusPerAmpdu, [this] { return fresh_ack(); });
    const auto& g = ack_geometry();
    std::int64_t bytes = 0;
    f.copies.assign(f.seqs.size(), 1);
    for (auto s : f.seqs) {
      const auto& e = sta_window_.at(s);
      bytes += g.mpdu_len(e.payload.msdus);
      if (e.tx_count > 0) ++total_.retransmissions;
    }
    sta_window_.record_attempt(f.seqs);
    f.airtime = ampdu_airtime(bytes, phy_);
    ++total_.sta_tx;
    trace("tx", "STA", std::to_string(f.seqs.size()) + " mpdus " + std::to_string(f.airtime.us()) + "us");
    return f;
  }

  // Station TCP receiver: segments released in order by the MAC.
  void station_receive_segments(std::int64_t segments) {
    total_.delivered += segments;
    std::int64_t keep = segments;
    if (cfg_.station_backlog_cap)
      keep = std::clamp<std::int64_t>(*cfg_.station_backlog_cap - sta_pending_ - sta_in_flight_, 0, segments);
    total_.discarded += segments - keep;
    sta_pending_ += keep;
  }

  // AP TCP sender: cumulative Acks released in order by the MAC.
  void ap_receive_ack(const AckMpdu& m) {
    if (m.cumulative > ap_cumulative_) {
      total_.acked += m.cumulative - ap_cumulative_;
      ap_cumulative_ = m.cumulative;
    }
  }

  void resolve_ap_frame() {
    const auto& g = data_geometry();
    back_ok_.clear();
    back_failed_.clear();
    for (std::size_t i = 0; i < ap_frame_.seqs.size(); ++i) {
      const auto s = ap_frame_.seqs[i];
      const auto& payload = ap_window_.at(s).payload;
      if (data_channel_.sample_mpdu(8 * g.mpdu_len(payload.segments), ap_frame_.copies[i])) {
        back_ok_.push_back(s);
        sta_rx_.receive(s, payload, [this](SeqNo, const DataMpdu& p) { station_receive_segments(p.segments); });
      } else {
        back_failed_.push_back(s);
      }
    }
  }

  void apply_ap_back() {
    ap_window_.apply_back(back_ok_);
    for (auto s : ap_window_.expire(back_failed_)) {
      ++total_.dropped;
      sta_rx_.skip(s, [this](SeqNo, const DataMpdu& p) { station_receive_segments(p.segments); });
    }
  }

  void resolve_sta_frame() {
    const auto& g = ack_geometry();
    back_ok_.clear();
    back_failed_.clear();
    for (auto s : sta_frame_.seqs) {
      const auto& payload = sta_window_.at(s).payload;
      if (ack_channel_.sample_mpdu(8 * g.mpdu_len(payload.msdus), 1)) {
        back_ok_.push_back(s);
        ap_rx_.receive(s, payload, [this](SeqNo, const AckMpdu& p) { ap_receive_ack(p); });
      } else {
        back_failed_.push_back(s);
      }
    }
  }

  void apply_sta_back() {
    for (auto s : back_ok_) sta_in_flight_ -= sta_window_.at(s).payload.segments;
    sta_window_.apply_back(back_ok_);
    expire_station(back_failed_);
  }

  void expire_station(std::span<const SeqNo> failed) {
    for (auto s : failed) {
      if (!sta_window_.contains(s)) continue;
      const auto& e = sta_window_.at(s);
      if (!e.acked && cfg_.retry_limit && e.tx_count >= *cfg_.retry_limit) sta_in_flight_ -= e.payload.segments;
    }
    for (auto s : sta_window_.expire(failed)) {
      ++total_.dropped;
      ap_rx_.skip(s, [this](SeqNo, const AckMpdu& p) { ap_receive_ack(p); });
    }
  }

  // Called at every TXOP / contention-round boundary.
  void boundary() {
    ++total_.cycles;
    maybe_open_window();
    if (!window_open_) return;
    if (cfg_.cycles ? total_.cycles >= *cfg_.cycles : now_ >= *cfg_.sim_time) done_ = true;
  }

  void maybe_open_window() {
    if (window_open_) return;
    const bool ready = cfg_.cycles ? total_.cycles >= warmup_cycles_ : now_ >= warmup_time_;
    if (!ready) return;
    window_open_ = true;
    window_start_ = now_;
    snapshot_ = total_;
  }

  SimResult result() const {
    SimResult r;
    const auto& a = total_;
    const auto& b = snapshot_;
    r.elapsed = now_ - window_start_;
    for (std::size_t i = 0; i < kTimeCategories; ++i) r.airtime[i] = a.airtime[i] - b.airtime[i];
    r.acked_segments = a.acked - b.acked;
    r.delivered_segments = a.delivered - b.acked;  // delivered and not yet credited at window start
    r.discarded_segments = a.discarded - b.discarded;
    r.collisions = a.collisions - b.collisions;
    r.cycles = a.cycles - b.cycles;
    r.ap_transmissions = a.ap_tx - b.ap_tx;
    r.station_transmissions = a.sta_tx - b.sta_tx;
    r.retransmissions = a.retransmissions - b.retransmissions;
    r.dropped_mpdus = a.dropped - b.dropped;
    r.goodput = account_goodput(r.acked_segments, r.elapsed);
    r.mean_txop = r.cycles > 0 ? r.elapsed.us() / static_cast<double>(r.cycles) : 0.0;
    r.mean_mpdus_per_tx = r.ap_transmissions > 0 ? static_cast<double>(a.ap_mpdus - b.ap_mpdus) /
                                                       static_cast<double>(r.ap_transmissions)
                                                 : 0.0;
    return r;
  }

  void dispatch(const Ev& ev) {
    switch (ev.kind) {
      case EvKind::BackoffEnd: on_backoff_end(ev); break;
      case EvKind::ApTxStart: on_ap_tx_start(); break;
      case EvKind::StaTxStart: on_sta_tx_start(); break;
      case EvKind::ContendTxStart: on_contend_tx_start(ev.parties); break;
      case EvKind::ApFrameEnd: on_ap_frame_end(); break;
      case EvKind::StaFrameEnd: on_sta_frame_end(); break;
      case EvKind::CollisionEnd: on_collision_end(); break;
      case EvKind::ApBackEnd: on_ap_back_end(); break;
      case EvKind::StaBackEnd: on_sta_back_end(); break;
      case EvKind::CfEnd: on_cf_end(); break;
    }
  }

  // -- Reverse Direction TXOPs ----------------------------------------------
  //
  // AIFS, BO, n x [Preamble, A-MPDU, SIFS, BAck, SIFS],
  // Preamble, station A-MPDU, SIFS, BAck, SIFS, CF-End.

  void start_txop() {
    const auto slots = static_cast<std::int64_t>(backoff_ap_.below(static_cast<std::uint64_t>(cfg_.ac.ap.cw_min)));
    ap_sent_in_txop_ = 0;
    schedule(now_ + cfg_.ac.ap.aifs + backoff(slots), EventPriority::TimerExpiry,
             {EvKind::BackoffEnd, TimeCategory::Overhead, static_cast<std::uint8_t>(Party::AP), epoch_});
  }

  void on_ap_tx_start() {
    ap_frame_ = build_ap_frame();
    schedule(now_ + phy_.preamble + ap_frame_.airtime, EventPriority::FrameEnd,
             {EvKind::ApFrameEnd, TimeCategory::Data});
  }

  void on_sta_tx_start() {
    sta_frame_ = build_sta_frame();
    schedule(now_ + phy_.preamble + sta_frame_.airtime, EventPriority::FrameEnd,
             {EvKind::StaFrameEnd, TimeCategory::Acks});
  }

  void on_ap_frame_end() {
    resolve_ap_frame();
    trace("rx", "STA", std::to_string(back_ok_.size()) + "/" + std::to_string(ap_frame_.seqs.size()) + " ok");
    schedule(now_ + phy_.sifs + phy_.back_time, EventPriority::FrameEnd, {EvKind::ApBackEnd, TimeCategory::Overhead});
  }

  void on_sta_frame_end() {
    resolve_sta_frame();
    trace("rx", "AP", std::to_string(back_ok_.size()) + "/" + std::to_string(sta_frame_.seqs.size()) + " ok");
    schedule(now_ + phy_.sifs + phy_.back_time, EventPriority::FrameEnd, {EvKind::StaBackEnd, TimeCategory::Overhead});
  }

  void on_ap_back_end() {
    apply_ap_back();
    if (cfg_.mode == OperationMode::NoRD) {
      cw_ap_ = cfg_.ac.ap.cw_min;
      residual_ap_.reset();
      end_round();
      return;
    }
    ++ap_sent_in_txop_;
    if (ap_sent_in_txop_ < cfg_.n) {
      schedule(now_ + phy_.sifs, EventPriority::TxStart, {EvKind::ApTxStart, TimeCategory::Overhead});
    } else if (station_has_traffic()) {
      schedule(now_ + phy_.sifs, EventPriority::TxStart, {EvKind::StaTxStart, TimeCategory::Overhead});
    } else {
      schedule(now_ + phy_.sifs + phy_.cf_end_time, EventPriority::FrameEnd, {EvKind::CfEnd, TimeCategory::Overhead});
    }
  }

  void on_sta_back_end() {
    apply_sta_back();
    if (cfg_.mode == OperationMode::NoRD) {
      cw_sta_ = cfg_.ac.station.cw_min;
      residual_sta_.reset();
      end_round();
      return;
    }
    schedule(now_ + phy_.sifs + phy_.cf_end_time, EventPriority::FrameEnd, {EvKind::CfEnd, TimeCategory::Overhead});
  }

  void on_cf_end() {
    trace("cf_end", "AP", "txop " + std::to_string(total_.cycles + 1));
    boundary();
    if (!done_) start_txop();
  }

  // -- EDCA contention (No-RD) ----------------------------------------------

  std::int64_t draw(Rng& rng, std::int64_t cw, std::optional<std::int64_t>& residual) {
    if (cfg_.backoff == BackoffPolicy::Freeze && residual) return *residual;
    residual = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(cw)));
    return *residual;
  }

  void start_round(Duration defer_ap, Duration defer_sta) {
    ++epoch_;
    round_start_ = now_;
    defer_ap_ = defer_ap;
    defer_sta_ = defer_sta;
    const auto a = draw(backoff_ap_, cw_ap_, residual_ap_);
    schedule(now_ + defer_ap + backoff(a), EventPriority::TimerExpiry,
             {EvKind::BackoffEnd, TimeCategory::Overhead, static_cast<std::uint8_t>(Party::AP), epoch_});
    if (station_has_traffic()) {
      const auto b = draw(backoff_sta_, cw_sta_, residual_sta_);
      schedule(now_ + defer_sta + backoff(b), EventPriority::TimerExpiry,
               {EvKind::BackoffEnd, TimeCategory::Overhead, static_cast<std::uint8_t>(Party::Station), epoch_});
    }
  }

  void on_backoff_end(const Ev& ev) {
    if (cfg_.mode == OperationMode::RD) {
      schedule(now_, EventPriority::TxStart, {EvKind::ApTxStart, TimeCategory::Overhead});
      return;
    }
    std::uint8_t parties = ev.parties;
    while (!queue_.empty()) {
      const auto& top = queue_.top();
      if (top.time != now_ || top.payload.kind != EvKind::BackoffEnd || top.payload.epoch != epoch_) break;
      parties |= top.payload.parties;
      queue_.pop();
    }
    ++epoch_;  // cancels the losing timer
    if (cfg_.backoff == BackoffPolicy::Freeze) {
      // The loser keeps the slots it has not yet counted down.
      auto freeze = [&](Party p, Duration defer, std::optional<std::int64_t>& residual) {
        if ((parties & static_cast<std::uint8_t>(p)) || !residual) return;
        const Duration counted = now_ - (round_start_ + defer);
        if (counted > Duration{}) *residual -= counted.tenths() / phy_.slot_time.tenths();
        *residual = std::max<std::int64_t>(*residual, 0);
      };
      freeze(Party::AP, defer_ap_, residual_ap_);
      freeze(Party::Station, defer_sta_, residual_sta_);
    }
    schedule(now_, EventPriority::TxStart, {EvKind::ContendTxStart, TimeCategory::Overhead, parties});
  }

  void on_contend_tx_start(std::uint8_t parties) {
    const bool ap = parties & static_cast<std::uint8_t>(Party::AP);
    const bool sta = parties & static_cast<std::uint8_t>(Party::Station);
    if (ap && sta) {
      ap_frame_ = build_ap_frame();
      sta_frame_ = build_sta_frame();
      const Duration longest = std::max(ap_frame_.airtime, sta_frame_.airtime);
      trace("collision", "AP+STA", std::to_string(longest.us()) + "us");
      schedule(now_ + phy_.preamble + longest, EventPriority::FrameEnd, {EvKind::CollisionEnd, TimeCategory::Collision});
    } else if (ap) {
      on_ap_tx_start();
    } else {
      on_sta_tx_start();
    }
  }

  void on_collision_end() {
    ++total_.collisions;
    for (auto s : ap_window_.expire(ap_frame_.seqs)) {
      ++total_.dropped;
      sta_rx_.skip(s, [this](SeqNo, const DataMpdu& p) { station_receive_segments(p.segments); });
    }
    expire_station(sta_frame_.seqs);
    cw_ap_ = std::min(2 * cw_ap_, std::max(cfg_.ac.ap.cw_max, cfg_.ac.ap.cw_min));
    cw_sta_ = std::min(2 * cw_sta_, std::max(cfg_.ac.station.cw_max, cfg_.ac.station.cw_min));
    residual_ap_.reset();
    residual_sta_.reset();
    boundary();
    if (!done_) start_round(cfg_.ac.ap.eifs, cfg_.ac.station.eifs);
  }

  void end_round() {
    boundary();
    if (!done_) start_round(cfg_.ac.ap.aifs, cfg_.ac.station.aifs);
  }

  SimConfig cfg_;
  PhyProfile phy_;
  std::ostream* trace_;

  Rng backoff_ap_;
  Rng backoff_sta_;
  BerChannel data_channel_;
  BerChannel ack_channel_;

  ArqWindow<DataMpdu> ap_window_;
  ReorderBuffer<DataMpdu> sta_rx_;
  ArqWindow<AckMpdu> sta_window_;
  ReorderBuffer<AckMpdu> ap_rx_;

  std::int64_t sta_pending_ = 0;
  std::int64_t sta_in_flight_ = 0;
  std::int64_t sta_cumulative_ = 0;
  std::int64_t ap_cumulative_ = 0;

  Frame<DataMpdu> ap_frame_;
  Frame<AckMpdu> sta_frame_;
  std::vector<SeqNo> back_ok_;
  std::vector<SeqNo> back_failed_;

  std::int64_t cw_ap_;
  std::int64_t cw_sta_;
  std::optional<std::int64_t> residual_ap_;
  std::optional<std::int64_t> residual_sta_;
  Duration round_start_{};
  Duration defer_ap_{};
  Duration defer_sta_{};
  std::uint64_t epoch_ = 0;
  std::int64_t ap_sent_in_txop_ = 0;

  EventQueue<Ev> queue_;
  Duration now_{};
  Counters total_;
  Counters snapshot_;
  bool window_open_ = false;
  Duration window_start_{};
  std::int64_t warmup_cycles_ = 0;
  Duration warmup_time_{};
  bool done_ = false;
};

}  // namespace detail

/// Simulates RD(n) TXOPs.
inline SimResult run_rd(SimConfig cfg, std::ostream* trace = nullptr) {
  if (cfg.mode != OperationMode::RD) throw std::invalid_argument("run_rd: mode must be RD");
  return detail::Simulation(cfg, trace).run();
}

/// Simulates EDCA contention between the AP and the station.
inline SimResult run_nord(SimConfig cfg, std::ostream* trace = nullptr) {
  if (cfg.mode != OperationMode::NoRD) throw std::invalid_argument("run_nord: mode must be NoRD");
  return detail::Simulation(cfg, trace).run();
}

inline SimResult simulate(const SimConfig& cfg, std::ostream* trace = nullptr) {
  return cfg.mode == OperationMode::RD ? run_rd(cfg, trace) : run_nord(cfg, trace);
}

}  // namespace rdgoodput
