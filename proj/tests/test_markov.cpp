#include <gtest/gtest.h>

#include <cmath>

#include "rdgoodput/channel.hpp"
#include "rdgoodput/markov.hpp"

using namespace rdgoodput;

namespace {

MarkovModel model(AccessCategory ac, int k_d, int m = 20, std::optional<MarkovVariant> v = std::nullopt) {
  return build_chain(ac_pair(ac), k_d, m, v);
}

}  // namespace

TEST(Markov, GroupSizes) {
  const auto m = model(AccessCategory::BE, 64);
  EXPECT_EQ(m.count(StateKind::Initial), 1u);
  EXPECT_EQ(m.count(StateKind::NoAcks), 32u);  // 2C
  EXPECT_GT(m.count(StateKind::Pending), 0u);
  EXPECT_GT(m.count(StateKind::Saturated), 0u);
  for (const auto& s : m.states) {
    if (s.kind == StateKind::NoAcks) { EXPECT_EQ(s.x, 0); }
    if (s.kind == StateKind::Pending) {
      EXPECT_GE(s.x, 1);
      EXPECT_LT(s.x, 20);
    }
    if (s.kind == StateKind::Saturated) { EXPECT_EQ(s.x, 20); }
    EXPECT_LT(s.c_ap, 32);
    if (s.c_sta) { EXPECT_LT(*s.c_sta, 32); }
  }
  EXPECT_EQ(m.variant, MarkovVariant::Symmetric);
  EXPECT_EQ(model(AccessCategory::VO, 64).variant, MarkovVariant::Asymmetric);
}

TEST(Markov, FirstDrawCollisionProbability) {
  EXPECT_DOUBLE_EQ(first_draw_collision_probability(model(AccessCategory::BE, 64)), 1.0 / 16.0);
  EXPECT_DOUBLE_EQ(first_draw_collision_probability(model(AccessCategory::VO, 64)), 3.0 / 16.0);
  EXPECT_DOUBLE_EQ(first_draw_collision_probability(model(AccessCategory::VO, 64, 20, MarkovVariant::Symmetric)), 0.25);
}

TEST(Markov, CollisionRuleSymmetry) {
  const int c = 16;
  int ab = 0, ba = 0;
  for (int a = 0; a < c; ++a)
    for (int b = 0; b < c; ++b) {
      ab += a == b;
      ba += b == a;
    }
  EXPECT_EQ(ab, ba);
  // the chain's outcomes agree with the rule state by state
  const auto m = model(AccessCategory::BK, 8, 3);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& s = m.states[i];
    if (!s.c_sta) continue;
    const Outcome expect = s.c_ap < *s.c_sta ? Outcome::ApTx : s.c_ap > *s.c_sta ? Outcome::StationTx : Outcome::Collision;
    EXPECT_EQ(m.outcomes[i], expect);
  }
}

TEST(Markov, RowStochastic) {
  for (auto ac : kAllAccessCategories) {
    const auto m = model(ac, 32);
    for (std::size_t i = 0; i < m.size(); ++i) ASSERT_NEAR(m.chain.row_sum(i), 1.0, 1e-12);
  }
}

TEST(Markov, TwoIntervalSizesOnly) {
  const auto m = model(AccessCategory::BE, 16, 5);
  for (const auto& b : m.chain.blocks) {
    const auto n = b.size();
    EXPECT_TRUE(n == 16 || n == 32 || n == 256 || n == 512 || n == 1024) << n;
  }
}

TEST(Markov, StateMetricsExamples) {
  const PhyProfile phy;
  const auto m = model(AccessCategory::BE, 64);
  const auto metrics = state_metrics(m, phy);
  EXPECT_EQ(m.states[0].kind, StateKind::Initial);
  EXPECT_EQ(metrics[0].time, Duration{});
  EXPECT_EQ(metrics[0].goodput, 0.0);
  bool saw_ap = false, saw_col = false;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const auto& s = m.states[i];
    if (m.outcomes[i] == Outcome::ApTx && s.c_ap == 0) {
      EXPECT_EQ(metrics[i].time, Duration::micros(43 + 48 + 4196 + 16 + 32));
      EXPECT_EQ(metrics[i].goodput, 0.0);
      saw_ap = true;
    }
    if (m.outcomes[i] == Outcome::Collision && s.x == 1) {
      // a single Ack batch is far shorter than the Data A-MPDU
      EXPECT_EQ(metrics[i].time, Duration::micros(43 + 48 + 16 + 28) + phy.slot_time * s.c_ap + data_ampdu_airtime(64, phy));
      EXPECT_EQ(metrics[i].goodput, 0.0);
      saw_col = true;
    }
    if (m.outcomes[i] == Outcome::StationTx) {
      const double expect = s.x * 64 * 7 * 1480 * 8 / metrics[i].time.us();
      EXPECT_NEAR(metrics[i].goodput, expect, 1e-9);
    }
  }
  EXPECT_TRUE(saw_ap);
  EXPECT_TRUE(saw_col);
}

TEST(Markov, ToyChains) {
  BlockChain periodic;
  periodic.blocks = {{0}, {1}};
  periodic.successor = {1, 0};
  auto r = solve(periodic);
  EXPECT_NEAR(r.pi[0], 0.5, 1e-12);
  EXPECT_NEAR(r.pi[1], 0.5, 1e-12);

  BlockChain lopsided;  // 0 -> {0, 1}, 1 -> {0}
  lopsided.blocks = {{0, 1}, {0}};
  lopsided.successor = {0, 1};
  r = solve(lopsided);
  EXPECT_NEAR(r.pi[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.pi[1], 1.0 / 3.0, 1e-12);
}

TEST(Markov, SolveResidualAndNormalization) {
  for (auto ac : {AccessCategory::BE, AccessCategory::VO}) {
    const auto m = model(ac, 64);
    const auto r = solve(m);
    double sum = 0.0;
    for (double p : r.pi) {
      EXPECT_GE(p, 0.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_LT(r.residual, 1e-10);
  }
}

TEST(Markov, NonConvergenceNamesConfiguration) {
  const auto m = model(AccessCategory::BE, 64);
  try {
    solve(m, SolveOptions{1e-14, 3});
    FAIL() << "expected non-convergence";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("BE K_D=64 M=20"), std::string::npos) << e.what();
  }
}

TEST(Markov, RandomWalkFrequencies) {
  const auto m = model(AccessCategory::VO, 8, 2);
  const auto pi = solve(m).pi;
  ASSERT_LT(m.size(), 400u);
  Rng rng(77);
  std::vector<double> visits(m.size(), 0.0);
  std::size_t s = 0;
  const std::size_t steps = 100'000'000;
  for (std::size_t i = 0; i < steps; ++i) {
    const auto& b = m.chain.blocks[m.chain.successor[s]];
    s = b[rng.below(b.size())];
    visits[s] += 1.0;
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) tv += std::abs(visits[i] / static_cast<double>(steps) - pi[i]);
  EXPECT_LT(tv / 2.0, 1e-3);
}

TEST(Markov, GoodputBounds) {
  const PhyProfile phy;
  for (auto ac : kAllAccessCategories) {
    const double g = goodput(model(ac, 64, 1), phy);
    EXPECT_GT(g, 0.0);
    EXPECT_LT(g, phy.data_rate.mbps());
  }
}

TEST(Markov, ReferenceValues) {
  const PhyProfile phy;
  EXPECT_NEAR(goodput(model(AccessCategory::BE, 64), phy), 1075.84, 0.01);
  EXPECT_NEAR(goodput(model(AccessCategory::VO, 64), phy), 968.725, 0.01);
}

TEST(Markov, ConvergenceInM) {
  const PhyProfile phy;
  for (auto ac : {AccessCategory::BK, AccessCategory::BE})
    for (int k : {8, 32, 64}) {
      const double g20 = goodput(model(ac, k, 20), phy);
      const double g25 = goodput(model(ac, k, 25), phy);
      EXPECT_LT(std::abs(g25 - g20) / g20, 0.01) << to_string(ac) << ' ' << k;
    }
}

TEST(Markov, Preconditions) {
  EXPECT_THROW(model(AccessCategory::BE, 0), std::invalid_argument);
  EXPECT_THROW(model(AccessCategory::BE, 65), std::invalid_argument);
  EXPECT_THROW(model(AccessCategory::BE, 8, 0), std::invalid_argument);
  EXPECT_THROW(model(AccessCategory::BE, 64, 26), std::invalid_argument);
}
