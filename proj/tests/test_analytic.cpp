#include <gtest/gtest.h>

#include <cmath>

#include "rdgoodput/analytic.hpp"

using namespace rdgoodput;

namespace {

RdConfig make(AccessCategory ac, std::int64_t k_d, std::int64_t n, std::int64_t d = 1) {
  RdConfig c;
  c.ac = ac_pair(ac);
  c.k_d = k_d;
  c.n = n;
  c.delayed_acks = d;
  return c;
}

// Oracle built from first principles in floating point.
struct CycleOracle {
  double cycle;
  double goodput;
};

CycleOracle cycle_oracle(double aifs, double cw_min, int k_d, int n, int d = 1) {
  auto air = [](double len) { return 4.0 * std::ceil((8.0 * len + 22.0) / (4.0 * 1299.9)); };
  const double bo = (cw_min - 1.0) / 2.0 * 9.0;
  const double c = aifs + bo + 16.0 + 26.0 + 48.0;
  const double t_ap = air(k_d * (7.0 * 1516.0 + 36.0));
  const double segs = static_cast<double>(n) * k_d * 7.0;
  const double acks = std::ceil(segs / d);
  const double k_a = std::ceil(acks / 178.0);
  const double t_sta = air(acks * 64.0 + k_a * 36.0);
  const double cyc = c + n * (48.0 + t_ap + 16.0 + 32.0 + 16.0) + t_sta + 16.0 + 32.0;
  return {cyc, segs * 1480.0 * 8.0 / cyc};
}

}  // namespace

TEST(Analytic, TapExamples) {
  const PhyProfile phy;
  EXPECT_EQ(t_ap(make(AccessCategory::BE, 64, 1), phy), Duration::micros(4196));
  EXPECT_EQ(t_ap(make(AccessCategory::BE, 1, 1), phy), Duration::micros(68));
  EXPECT_THROW(t_ap(make(AccessCategory::BE, 0, 1), phy), std::invalid_argument);
}

TEST(Analytic, TstaExamples) {
  const PhyProfile phy;
  EXPECT_EQ(t_sta(make(AccessCategory::BE, 64, 1), phy), Duration::micros(180));
  EXPECT_EQ(ack_mpdus(make(AccessCategory::BE, 64, 1)), 3);
  EXPECT_EQ(t_sta(make(AccessCategory::BE, 1, 1), phy), Duration::micros(4));
  EXPECT_EQ(ack_mpdus(make(AccessCategory::BE, 64, 25)), 63);
}

TEST(Analytic, CycleExample) {
  const PhyProfile phy;
  const auto b = cycle(make(AccessCategory::BE, 64, 1), phy);
  EXPECT_EQ(b.c_overhead, Duration::tenths(2005));  // 43 + 67.5 + 16 + 26 + 48
  EXPECT_EQ(b.cycle, Duration::tenths(47365));
  EXPECT_NEAR(b.goodput, 1119.9, 0.05);
  EXPECT_EQ(b.cycle, b.c_overhead + b.per_ap_tx * b.n + b.station_tail);
}

TEST(Analytic, Rejections) {
  const PhyProfile phy;
  EXPECT_THROW(cycle(make(AccessCategory::BE, 64, 0), phy), std::invalid_argument);
  EXPECT_THROW(cycle(make(AccessCategory::BE, 64, 26), phy), std::invalid_argument);
  EXPECT_NO_THROW(cycle(make(AccessCategory::BE, 64, 50, 2), phy));
  EXPECT_THROW(cycle(make(AccessCategory::BE, 64, 51, 2), phy), std::invalid_argument);
}

TEST(Analytic, BkVersusBe) {
  const PhyProfile phy;
  for (int k : {1, 17, 64})
    for (int n : {1, 3, 20}) {
      const auto bk = cycle(make(AccessCategory::BK, k, n), phy);
      const auto be = cycle(make(AccessCategory::BE, k, n), phy);
      EXPECT_EQ(bk.cycle - be.cycle, Duration::micros(36));
    }
}

TEST(Analytic, MatchesOracleOnFullGrid) {
  const PhyProfile phy;
  for (auto ac : kAllAccessCategories) {
    const auto p = ac_pair(ac);
    for (int d : {1, 2})
      for (int k = 1; k <= 64; k += 3)
        for (int n = 1; n <= n_max(k, d); n += std::max<int>(1, static_cast<int>(n_max(k, d) / 9))) {
          const auto b = cycle(make(ac, k, n, d), phy);
          const auto o = cycle_oracle(p.ap.aifs.us(), static_cast<double>(p.ap.cw_min), k, n, d);
          ASSERT_NEAR(b.cycle.us(), o.cycle, 1e-9) << k << ' ' << n << ' ' << d;
          ASSERT_NEAR(b.goodput, o.goodput, 1e-9 * o.goodput);
        }
  }
}

TEST(Analytic, ClosedFormWithinOnePercent) {
  const PhyProfile phy;
  for (auto ac : kAllAccessCategories)
    for (int k = 4; k <= 64; ++k)
      for (int n = 1; n <= std::min<std::int64_t>(25, n_max(k)); ++n) {
        const auto c = make(ac, k, n);
        const double rounded = cycle(c, phy).goodput;
        const double unrounded = goodput_closed_form(c, phy);
        ASSERT_LT(std::abs(unrounded - rounded) / rounded, 0.01) << to_string(ac) << ' ' << k << ' ' << n;
      }
}

TEST(Analytic, ClosedFormMonotoneInNAndKd) {
  const PhyProfile phy;
  for (auto ac : kAllAccessCategories)
    for (int k = 1; k <= 64; ++k)
      for (int n = 1; n <= n_max(k); ++n) {
        const double g = goodput_closed_form(make(ac, k, n), phy);
        if (n + 1 <= n_max(k)) { ASSERT_GT(goodput_closed_form(make(ac, k, n + 1), phy), g) << k << ' ' << n; }
        if (k + 1 <= 64 && n <= n_max(k + 1)) { ASSERT_GT(goodput_closed_form(make(ac, k + 1, n), phy), g) << k << ' ' << n; }
      }
}

// Symbol rounding can shave a little off the next point: at most one extra
// symbol for each A-MPDU of the TXOP.
TEST(Analytic, RoundedGoodputDipsOnlyBySymbolRounding) {
  const PhyProfile phy;
  int dips = 0;
  for (auto ac : kAllAccessCategories)
    for (int k = 1; k <= 64; ++k)
      for (int n = 1; n <= n_max(k); ++n) {
        const auto b = cycle(make(ac, k, n), phy);
        const double slack = b.goodput * static_cast<double>(n + 2) * phy.t_sym.us() / b.cycle.us();
        auto check = [&](const RdConfig& next) {
          const double g = cycle(next, phy).goodput;
          dips += g < b.goodput;
          ASSERT_GE(g, b.goodput - slack) << to_string(ac) << ' ' << k << ' ' << n;
        };
        if (n + 1 <= n_max(k)) check(make(ac, k, n + 1));
        if (k + 1 <= 64 && n <= n_max(k + 1)) check(make(ac, k + 1, n));
        EXPECT_LT(b.goodput, phy.data_rate.mbps());
      }
  EXPECT_GT(dips, 0);
  // small n on a fixed K_D rises strictly
  for (int n = 1; n < 25; ++n)
    EXPECT_GT(cycle(make(AccessCategory::BE, 64, n + 1), phy).goodput, cycle(make(AccessCategory::BE, 64, n), phy).goodput);
}

TEST(Analytic, NMax) {
  EXPECT_EQ(n_max(64, 1), 25);
  EXPECT_EQ(n_max(1, 1), 1627);
  EXPECT_EQ(n_max(64, 2), 50);
  for (int k = 1; k <= 64; ++k) {
    EXPECT_LE(n_max(k) * k * 7, 64 * 178);
    EXPECT_GT((n_max(k) + 1) * k * 7, 64 * 178);
  }
  EXPECT_THROW(n_max(0), std::invalid_argument);
}

TEST(Analytic, DelayedAcksNeverHurt) {
  const PhyProfile phy;
  for (int k = 1; k <= 64; k += 7)
    for (int n = 1; n <= n_max(k); n += 5)
      EXPECT_GE(cycle(make(AccessCategory::BE, k, n, 2), phy).goodput, cycle(make(AccessCategory::BE, k, n, 1), phy).goodput);
}

TEST(Analytic, DelayedAckMaxGainAbout2Percent) {
  const PhyProfile phy;
  for (auto ac : kAllAccessCategories) {
    const double g1 = cycle(make(ac, 64, n_max(64, 1), 1), phy).goodput;
    const double g2 = cycle(make(ac, 64, n_max(64, 2), 2), phy).goodput;
    const double gain = g2 / g1 - 1.0;
    EXPECT_GT(gain, 0.01);
    EXPECT_LT(gain, 0.03);
  }
}

TEST(Analytic, PackSegmentsAgreesWithCycle) {
  const PhyProfile phy;
  const auto ap = ac_table(AccessCategory::BE, Role::AP);
  // Whole transmissions of 64 full MPDUs are exactly RD(n) with K_D = 64.
  for (int n = 1; n <= 25; ++n) {
    const auto p = pack_segments(n * 448, ap, phy, 1);
    EXPECT_EQ(p.txop, cycle(make(AccessCategory::BE, 64, n), phy).cycle);
  }
}

TEST(Analytic, FrontierProperties) {
  const PhyProfile phy;
  const auto grid = full_segment_grid(1);
  EXPECT_EQ(grid.size(), 11392u);
  std::vector<std::vector<TxopPoint>> fronts;
  for (auto ac : kAllAccessCategories) {
    const auto f = max_goodput_vs_txop(ac_table(ac, Role::AP), phy, 1, grid);
    ASSERT_FALSE(f.empty());
    for (std::size_t i = 1; i < f.size(); ++i) {
      EXPECT_GT(f[i].txop, f[i - 1].txop);
      EXPECT_GT(f[i].goodput, f[i - 1].goodput);
    }
    fronts.push_back(f);
  }
  EXPECT_THROW(max_goodput_vs_txop(ac_table(AccessCategory::BE, Role::AP), phy, 1, std::vector<std::int64_t>{}),
               std::invalid_argument);
  EXPECT_THROW(max_goodput_vs_txop(ac_table(AccessCategory::BE, Role::AP), phy, 1, std::vector<std::int64_t>{11393}),
               std::invalid_argument);
}
