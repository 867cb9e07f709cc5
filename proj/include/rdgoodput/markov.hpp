#pragma once

// Markov chain of the contention-based (No-RD) scheme on an error-free
// channel. A state (X, C_AP, C_STA) holds the number X of K_D*7-Ack batches
// queued at the station and the backoff numbers both parties drew for the
// next channel access; its outcome (AP transmits, station transmits or
// collision) is fixed by the two numbers. Backoffs are redrawn every round.
//
// Groups: (A) the Initial state; (B) X = 0, station idle; (C) 1 <= X < M;
// (D) X = M, where further Data A-MPDUs are dropped by the station.
//
// Each party's contention window is either [0, CW_min) or, after a collision,
// [0, 2*CW_min); a party returns to CW_min after its own success and keeps its
// window when the other party wins. Pending states therefore carry the two
// window stages alongside the drawn numbers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "rdgoodput/frames.hpp"
#include "rdgoodput/units.hpp"

namespace rdgoodput {

enum class MarkovVariant {
  Symmetric,   // equal AIFS: collision iff C_AP == C_STA
  Asymmetric,  // AP AIFS one slot shorter: collision iff C_AP == C_STA + 1
};

enum class StateKind { Initial, NoAcks, Pending, Saturated };
enum class Outcome { None, ApTx, StationTx, Collision };

inline MarkovVariant variant_for(const AcPair& ac) {
  return ac.station.aifs > ac.ap.aifs ? MarkovVariant::Asymmetric : MarkovVariant::Symmetric;
}

struct MarkovState {
  StateKind kind = StateKind::Initial;
  int x = 0;
  int c_ap = 0;
  std::optional<int> c_sta;
  int ap_stage = 0;   // 0: [0, CW_min), 1: [0, 2*CW_min)
  int sta_stage = 0;

  friend bool operator==(const MarkovState&, const MarkovState&) = default;
};

// Row-stochastic matrix whose every row is uniform over one "draw block":
// after each round both parties draw fresh backoff numbers uniformly, so all
// successors of a state share the same probability.
struct BlockChain {
  std::vector<std::uint32_t> successor;            // state -> block
  std::vector<std::vector<std::uint32_t>> blocks;  // block -> member states

  std::size_t size() const { return successor.size(); }

  template <typename F>
  void for_each_transition(std::size_t from, F&& f) const {
    const auto& b = blocks[successor[from]];
    const double p = 1.0 / static_cast<double>(b.size());
    for (auto to : b) f(static_cast<std::size_t>(to), p);
  }

  double row_sum(std::size_t from) const {
    double s = 0.0;
    for_each_transition(from, [&](std::size_t, double p) { s += p; });
    return s;
  }

  /// One step pi -> pi * P.
  std::vector<double> step(const std::vector<double>& pi) const {
    std::vector<double> mass(blocks.size(), 0.0);
    for (std::size_t s = 0; s < successor.size(); ++s) mass[successor[s]] += pi[s];
    std::vector<double> out(successor.size(), 0.0);
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (mass[b] == 0.0) continue;
      const double share = mass[b] / static_cast<double>(blocks[b].size());
      for (auto q : blocks[b]) out[q] += share;
    }
    return out;
  }
};

struct MarkovModel {
  AcPair ac;
  int k_d = 0;
  int m_cap = 0;
  int c_ap = 0;   // CW_min of the AP
  int c_sta = 0;  // CW_min of the station
  MarkovVariant variant = MarkovVariant::Symmetric;

  std::vector<MarkovState> states;
  std::vector<Outcome> outcomes;
  BlockChain chain;

  std::size_t size() const { return states.size(); }

  std::string describe() const {
    std::ostringstream os;
    os << to_string(ac.ap.ac) << " K_D=" << k_d << " M=" << m_cap
       << (variant == MarkovVariant::Symmetric ? " symmetric" : " asymmetric");
    return os.str();
  }

  std::size_t count(StateKind k) const {
    return static_cast<std::size_t>(std::count_if(states.begin(), states.end(),
                                                  [k](const MarkovState& s) { return s.kind == k; }));
  }
};

namespace detail {

inline int window_size(int cw_min, std::int64_t cw_max, int stage) {
  const std::int64_t w = static_cast<std::int64_t>(cw_min) << stage;
  return static_cast<int>(std::min<std::int64_t>(w, std::max<std::int64_t>(cw_max, cw_min)));
}

class ChainBuilder {
 public:
  explicit ChainBuilder(MarkovModel& m) : m_(m) {}

  void build() {
    add({StateKind::Initial, 0, 0, std::nullopt, 0, 0});
    for (std::size_t i = 0; i < m_.states.size(); ++i) {
      const auto s = m_.states[i];
      Outcome o = Outcome::None;
      std::uint32_t next = 0;
      switch (s.kind) {
        case StateKind::Initial:
          next = no_acks_block(0);
          break;
        case StateKind::NoAcks:
          o = Outcome::ApTx;
          next = pending_block(1, 0, 0);
          break;
        case StateKind::Pending:
        case StateKind::Saturated: {
          const int offset = m_.variant == MarkovVariant::Asymmetric ? 1 : 0;
          const int sta = *s.c_sta + offset;
          if (s.c_ap < sta) {
            o = Outcome::ApTx;
            next = pending_block(std::min(s.x + 1, m_.m_cap), 0, s.sta_stage);
          } else if (sta < s.c_ap) {
            o = Outcome::StationTx;
            next = no_acks_block(s.ap_stage);
          } else {
            o = Outcome::Collision;
            next = pending_block(s.x, 1, 1);
          }
          break;
        }
      }
      m_.outcomes.push_back(o);
      m_.chain.successor.push_back(next);
    }
  }

 private:
  using Key = std::tuple<int, int, int, int, int, int>;

  static Key key_of(const MarkovState& s) {
    return {static_cast<int>(s.kind), s.x, s.c_ap, s.c_sta.value_or(-1), s.ap_stage, s.sta_stage};
  }

  std::uint32_t add(const MarkovState& s) {
    auto [it, inserted] = index_.try_emplace(key_of(s), static_cast<std::uint32_t>(m_.states.size()));
    if (inserted) m_.states.push_back(s);
    return it->second;
  }

  // Group B states are keyed by C_AP alone: the AP transmits whatever its
  // window, and resets it.
  std::uint32_t no_acks_block(int ap_stage) {
    const Key bk{-1, 0, ap_stage, 0, 0, 0};
    if (auto it = blocks_.find(bk); it != blocks_.end()) return it->second;
    std::vector<std::uint32_t> members;
    const int w = window_size(m_.c_ap, m_.ac.ap.cw_max, ap_stage);
    for (int a = 0; a < w; ++a) members.push_back(add({StateKind::NoAcks, 0, a, std::nullopt, 0, 0}));
    return new_block(bk, std::move(members));
  }

  std::uint32_t pending_block(int x, int ap_stage, int sta_stage) {
    const Key bk{-2, x, ap_stage, sta_stage, 0, 0};
    if (auto it = blocks_.find(bk); it != blocks_.end()) return it->second;
    const auto kind = x >= m_.m_cap ? StateKind::Saturated : StateKind::Pending;
    const int wa = window_size(m_.c_ap, m_.ac.ap.cw_max, ap_stage);
    const int ws = window_size(m_.c_sta, m_.ac.station.cw_max, sta_stage);
    std::vector<std::uint32_t> members;
    members.reserve(static_cast<std::size_t>(wa * ws));
    for (int a = 0; a < wa; ++a)
      for (int b = 0; b < ws; ++b) members.push_back(add({kind, x, a, b, ap_stage, sta_stage}));
    return new_block(bk, std::move(members));
  }

  std::uint32_t new_block(const Key& bk, std::vector<std::uint32_t> members) {
    const auto id = static_cast<std::uint32_t>(m_.chain.blocks.size());
    m_.chain.blocks.push_back(std::move(members));
    blocks_.emplace(bk, id);
    return id;
  }

  MarkovModel& m_;
  std::map<Key, std::uint32_t> index_;
  std::map<Key, std::uint32_t> blocks_;
};

}  // namespace detail

/// Builds the reachable state space and transitions for K_D MPDUs of 7 Data
/// MSDUs per AP transmission and an Ack backlog capped at M batches.
inline MarkovModel build_chain(const AcPair& ac, int k_d, int m_cap = 20,
                               std::optional<MarkovVariant> variant = std::nullopt) {
  if (k_d < 1 || k_d > kMaxMpdusPerAmpdu) throw std::invalid_argument("build_chain: k_d must be in [1, 64]");
  if (m_cap < 1) throw std::invalid_argument("build_chain: M must be >= 1");
  const auto per_data = data_geometry().msdus_per_mpdu;
  const auto per_ack = ack_geometry().msdus_per_mpdu;
  if (static_cast<std::int64_t>(m_cap) * k_d * per_data > kMaxMpdusPerAmpdu * per_ack)
    throw std::invalid_argument("build_chain: M*K_D*7 Acks exceed one station A-MPDU (64*178)");

  MarkovModel m;
  m.ac = ac;
  m.k_d = k_d;
  m.m_cap = m_cap;
  m.c_ap = static_cast<int>(ac.ap.cw_min);
  m.c_sta = static_cast<int>(ac.station.cw_min);
  m.variant = variant.value_or(variant_for(ac));
  detail::ChainBuilder(m).build();
  return m;
}

/// Probability that the first contention after an AP transmission from an
/// idle station (both windows at CW_min) ends in a collision.
inline double first_draw_collision_probability(const MarkovModel& m) {
  const int offset = m.variant == MarkovVariant::Asymmetric ? 1 : 0;
  int hits = 0;
  for (int a = 0; a < m.c_ap; ++a)
    for (int b = 0; b < m.c_sta; ++b) hits += (a == b + offset) ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(m.c_ap * m.c_sta);
}

struct StateMetrics {
  Duration time{};
  double goodput = 0.0;  // Mbps
  double stationary_prob = 0.0;
};

inline Duration data_ampdu_airtime(int k_d, const PhyProfile& phy) {
  const auto& g = data_geometry();
  return ampdu_airtime(g.ampdu_len(k_d, k_d * g.msdus_per_mpdu), phy);
}

inline Duration ack_ampdu_airtime(std::int64_t acks, const PhyProfile& phy) {
  const auto& g = ack_geometry();
  const std::int64_t mpdus = (acks + g.msdus_per_mpdu - 1) / g.msdus_per_mpdu;
  return ampdu_airtime(g.ampdu_len(mpdus, acks), phy);
}

/// Time and goodput metric of every state; `pi`, when given, fills the
/// stationary probabilities.
inline std::vector<StateMetrics> state_metrics(const MarkovModel& m, const PhyProfile& phy,
                                               const std::vector<double>& pi = {}) {
  const int offset = m.variant == MarkovVariant::Asymmetric ? 1 : 0;
  const Duration t_data = data_ampdu_airtime(m.k_d, phy);
  const std::int64_t batch = static_cast<std::int64_t>(m.k_d) * data_geometry().msdus_per_mpdu;
  std::vector<Duration> t_ack(static_cast<std::size_t>(m.m_cap) + 1);
  for (int x = 1; x <= m.m_cap; ++x) t_ack[static_cast<std::size_t>(x)] = ack_ampdu_airtime(x * batch, phy);

  std::vector<StateMetrics> out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& s = m.states[i];
    auto& r = out[i];
    if (!pi.empty()) r.stationary_prob = pi[i];
    const Duration lead = m.ac.ap.aifs + phy.preamble;
    switch (m.outcomes[i]) {
      case Outcome::None:
        break;
      case Outcome::ApTx:
        r.time = lead + phy.slot_time * s.c_ap + t_data + phy.sifs + phy.back_time;
        break;
      case Outcome::StationTx: {
        const auto x = static_cast<std::size_t>(s.x);
        r.time = lead + phy.slot_time * (*s.c_sta + offset) + t_ack[x] + phy.sifs + phy.back_time;
        r.goodput = mbps(static_cast<double>(s.x * batch * kTcpDataPayload * 8), r.time);
        break;
      }
      case Outcome::Collision: {
        const auto x = static_cast<std::size_t>(s.x);
        r.time = lead + phy.slot_time * s.c_ap + std::max(t_data, t_ack[x]) + phy.sifs + phy.ack_time;
        break;
      }
    }
  }
  return out;
}

struct SolveOptions {
  double tolerance = 1e-14;
  std::size_t max_iterations = 200000;
};

struct StationaryDistribution {
  std::vector<double> pi;
  std::size_t iterations = 0;
  double residual = 0.0;  // max |pi P - pi|
  bool damped = false;    // lazy-chain averaging was needed
};

/// Power iteration; if the plain iteration has not settled after half the
/// budget (e.g. a periodic chain) it continues on the lazy chain
/// pi <- (pi + pi P) / 2, which has the same stationary distribution.
inline StationaryDistribution solve(const BlockChain& chain, const SolveOptions& opt = {},
                                    const std::string& what = "chain") {
  const std::size_t n = chain.size();
  if (n == 0) throw std::invalid_argument("solve: empty chain");
  StationaryDistribution r;
  r.pi.assign(n, 1.0 / static_cast<double>(n));
  const std::size_t plain_budget = opt.max_iterations / 2;

  auto normalize = [](std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    for (double& x : v) x /= s;
  };

  for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
    auto next = chain.step(r.pi);
    if (it > plain_budget) {
      r.damped = true;
      for (std::size_t i = 0; i < n; ++i) next[i] = 0.5 * (next[i] + r.pi[i]);
    }
    normalize(next);
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(next[i] - r.pi[i]));
    r.pi = std::move(next);
    r.iterations = it;
    if (diff < opt.tolerance) {
      const auto check = chain.step(r.pi);
      r.residual = 0.0;
      for (std::size_t i = 0; i < n; ++i) r.residual = std::max(r.residual, std::abs(check[i] - r.pi[i]));
      return r;
    }
  }
  throw std::runtime_error("solve: no convergence after " + std::to_string(opt.max_iterations) +
                           " iterations for " + what);
}

inline StationaryDistribution solve(const MarkovModel& m, const SolveOptions& opt = {}) {
  return solve(m.chain, opt, m.describe());
}

/// G = sum(pi * T * G_s) / sum(pi * T).
inline double goodput(const std::vector<StateMetrics>& metrics) {
  double num = 0.0, den = 0.0;
  for (const auto& s : metrics) {
    num += s.stationary_prob * s.time.us() * s.goodput;
    den += s.stationary_prob * s.time.us();
  }
  return den > 0.0 ? num / den : 0.0;
}

inline double goodput(const MarkovModel& m, const PhyProfile& phy, const SolveOptions& opt = {}) {
  return goodput(state_metrics(m, phy, solve(m, opt).pi));
}

}  // namespace rdgoodput
