#include <gtest/gtest.h>

#include <cmath>

#include "rdgoodput/channel.hpp"

using namespace rdgoodput;

TEST(Channel, FailureProbExamples) {
  EXPECT_EQ(mpdu_failure_prob(0, 1e-3), 0.0);
  EXPECT_EQ(mpdu_failure_prob(85184, 0.0), 0.0);
  const double oracle = 1.0 - std::pow(1.0 - 1e-6, 85184.0);
  EXPECT_NEAR(mpdu_failure_prob(85184, 1e-6), oracle, 1e-9);
  EXPECT_NEAR(mpdu_failure_prob(85184, 1e-6), 0.0817, 5e-5);
  EXPECT_THROW(mpdu_failure_prob(-1, 1e-6), std::invalid_argument);
  EXPECT_THROW(mpdu_failure_prob(10, 1.0), std::invalid_argument);
}

TEST(Channel, FailureProbIncreasingInBits) {
  for (double ber : {1e-7, 1e-5, 1e-3}) {
    double prev = 0.0;
    for (std::int64_t b = 1; static_cast<double>(b) * ber < 20.0; b = b * 3 / 2 + 1) {
      const double p = mpdu_failure_prob(b, ber);
      EXPECT_GT(p, prev);
      prev = p;
    }
  }
}

TEST(Channel, ErrorFreeAlwaysSucceeds) {
  BerChannel ch(0.0, 42);
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(ch.sample_mpdu(85184, 1 + i % 2));
}

TEST(Channel, NearOneBerAlwaysFails) {
  BerChannel ch(0.999999, 7);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(ch.sample_mpdu(85184, 1));
}

TEST(Channel, DuplicateCopiesMonteCarlo) {
  const std::int64_t bits = 85184;
  const double ber = 1e-5;
  const double p = mpdu_failure_prob(bits, ber);
  const double q = p * p;
  const int trials = 1'000'000;
  BerChannel ch(ber, 2024);
  int failures = 0;
  for (int i = 0; i < trials; ++i) failures += ch.sample_mpdu(bits, 2) ? 0 : 1;
  const double sigma = std::sqrt(q * (1.0 - q) / trials);
  EXPECT_NEAR(static_cast<double>(failures) / trials, q, 3.0 * sigma);
  EXPECT_THROW(ch.sample_mpdu(bits, 3), std::invalid_argument);
  EXPECT_THROW(ch.sample_mpdu(bits, 0), std::invalid_argument);
}

TEST(Channel, SingleCopyMonteCarlo) {
  const std::int64_t bits = 20000;
  const double ber = 2e-5;
  const double p = mpdu_failure_prob(bits, ber);
  const int trials = 400'000;
  BerChannel ch(ber, 99);
  int failures = 0;
  for (int i = 0; i < trials; ++i) failures += ch.sample_mpdu(bits) ? 0 : 1;
  EXPECT_NEAR(static_cast<double>(failures) / trials, p, 3.0 * std::sqrt(p * (1 - p) / trials));
}

TEST(Channel, Replayable) {
  BerChannel a(1e-5, 5), b(1e-5, 5);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(a.sample_mpdu(50000), b.sample_mpdu(50000));
}

TEST(Rng, SplitStreamsAreDistinctAndStable) {
  const Rng root(11);
  auto a = root.split(0), b = root.split(1), a2 = root.split(0);
  int same = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    same += x == b.next();
    ASSERT_EQ(x, a2.next());
  }
  EXPECT_EQ(same, 0);
}

TEST(Rng, BelowIsUniform) {
  Rng r(3);
  std::vector<int> counts(7, 0);
  const int n = 700000;
  for (int i = 0; i < n; ++i) ++counts[r.below(7)];
  for (int c : counts) EXPECT_NEAR(c, n / 7.0, 5.0 * std::sqrt(n / 7.0));
  EXPECT_THROW(r.below(0), std::invalid_argument);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}
