#pragma once

// Selective-repeat MAC ARQ: the transmitter's 64-sequence transmission window
// and the receiver's in-order release buffer.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rdgoodput {

using SeqNo = std::uint64_t;

// Sequence numbers are kept unwrapped (64-bit, monotone); the 12-bit modular
// numbering of the air interface never matters for a single flow.
template <typename Payload>
class ArqWindow {
 public:
  static constexpr std::size_t kSize = 64;

  struct Entry {
    Payload payload{};
    bool acked = false;
    bool dropped = false;
    unsigned tx_count = 0;
  };

  explicit ArqWindow(std::optional<unsigned> retry_limit = std::nullopt, SeqNo base = 0)
      : retry_limit_(retry_limit), base_(base), end_(base) {
    if (retry_limit_ && *retry_limit_ == 0) throw std::invalid_argument("ArqWindow: retry limit must be >= 1");
  }

  /// Lowest unacknowledged sequence number (X).
  SeqNo base() const { return base_; }
  /// Next sequence number to be assigned.
  SeqNo end() const { return end_; }
  bool empty() const { return base_ == end_; }
  std::optional<unsigned> retry_limit() const { return retry_limit_; }

  std::size_t outstanding() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.acked ? 0 : 1;
    return n;
  }

  bool can_admit() const { return end_ < base_ + kSize; }

  SeqNo admit(Payload p) {
    if (!can_admit()) throw std::logic_error("ArqWindow::admit: window full");
    entries_.push_back(Entry{std::move(p)});
    return end_++;
  }

  bool contains(SeqNo s) const { return s >= base_ && s < end_; }

  const Entry& at(SeqNo s) const {
    if (!contains(s)) throw std::out_of_range("ArqWindow::at: sequence not in window");
    return entries_[static_cast<std::size_t>(s - base_)];
  }

  /// Lowest-sequence unacknowledged MPDUs, at most k of them.
  std::vector<SeqNo> select_for_tx(std::size_t k) const {
    check_k(k);
    std::vector<SeqNo> out;
    for (std::size_t i = 0; i < entries_.size() && out.size() < k; ++i)
      if (!entries_[i].acked) out.push_back(base_ + i);
    return out;
  }

  /// As above, then fills up with fresh payloads while the window has room.
  /// `fresh` is called as `std::optional<Payload>()` and returns nullopt when
  /// the source has nothing more to send.
  template <typename Source>
  std::vector<SeqNo> select_for_tx(std::size_t k, Source&& fresh) {
    auto out = std::as_const(*this).select_for_tx(k);
    while (out.size() < k && can_admit()) {
      std::optional<Payload> p = fresh();
      if (!p) break;
      out.push_back(admit(std::move(*p)));
    }
    return out;
  }

  /// One transmission attempt for each listed MPDU (duplicated copies in the
  /// same A-MPDU count once).
  void record_attempt(std::span<const SeqNo> seqs) {
    for (auto s : seqs)
      if (contains(s)) ++entries_[static_cast<std::size_t>(s - base_)].tx_count;
  }

  /// Marks MPDUs acknowledged by a Block Ack and slides the window past the
  /// acknowledged prefix. Returns the number of positions slid. Acks for
  /// sequence numbers outside the window are counted and otherwise ignored.
  std::size_t apply_back(std::span<const SeqNo> acked) {
    for (auto s : acked) {
      if (!contains(s)) {
        ++unknown_acks_;
        continue;
      }
      entries_[static_cast<std::size_t>(s - base_)].acked = true;
    }
    return slide();
  }

  /// Handles MPDUs that were sent but not acknowledged: those that reached the
  /// retry limit are dropped (and slid past). Returns the dropped sequences.
  std::vector<SeqNo> expire(std::span<const SeqNo> failed) {
    std::vector<SeqNo> dropped;
    if (!retry_limit_) return dropped;
    for (auto s : failed) {
      if (!contains(s)) continue;
      auto& e = entries_[static_cast<std::size_t>(s - base_)];
      if (!e.acked && e.tx_count >= *retry_limit_) {
        e.acked = true;
        e.dropped = true;
        dropped.push_back(s);
        ++dropped_total_;
      }
    }
    slide();
    return dropped;
  }

  std::size_t unknown_acks() const { return unknown_acks_; }
  std::size_t dropped_total() const { return dropped_total_; }

 private:
  static void check_k(std::size_t k) {
    if (k < 1 || k > kSize) throw std::invalid_argument("ArqWindow::select_for_tx: k must be in [1, 64]");
  }

  std::size_t slide() {
    std::size_t n = 0;
    while (!entries_.empty() && entries_.front().acked) {
      entries_.pop_front();
      ++base_;
      ++n;
    }
    return n;
  }

  std::optional<unsigned> retry_limit_;
  SeqNo base_;
  SeqNo end_;
  std::deque<Entry> entries_;
  std::size_t unknown_acks_ = 0;
  std::size_t dropped_total_ = 0;
};

// Receiver side: holds out-of-order MPDUs and releases them to the upper
// layer strictly in sequence order.
template <typename Payload>
class ReorderBuffer {
 public:
  explicit ReorderBuffer(SeqNo first = 0) : expected_(first) {}

  SeqNo expected() const { return expected_; }
  std::size_t held() const { return held_.size(); }

  /// True if `s` was already received (released or held).
  bool seen(SeqNo s) const { return s < expected_ || held_.count(s) != 0; }

  /// Accepts an MPDU; `deliver(SeqNo, const Payload&)` is called for every
  /// MPDU that becomes releasable, in order. Duplicates are ignored.
  template <typename Deliver>
  void receive(SeqNo s, Payload p, Deliver&& deliver) {
    if (seen(s)) return;
    held_.emplace(s, std::optional<Payload>(std::move(p)));
    release(deliver);
  }

  /// The transmitter gave up on `s`; later MPDUs may now be released.
  template <typename Deliver>
  void skip(SeqNo s, Deliver&& deliver) {
    if (seen(s)) return;
    held_.emplace(s, std::nullopt);
    release(deliver);
  }

 private:
  template <typename Deliver>
  void release(Deliver& deliver) {
    for (auto it = held_.begin(); it != held_.end() && it->first == expected_; it = held_.erase(it)) {
      if (it->second) deliver(it->first, *it->second);
      ++expected_;
    }
  }

  SeqNo expected_;
  std::map<SeqNo, std::optional<Payload>> held_;
};

}  // namespace rdgoodput
