#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "c2lab/metrics.hpp"

using namespace c2lab;
using std::chrono::milliseconds;
using std::chrono::seconds;

namespace {

PacketRecord record(std::uint64_t seq, double delivered_ms, double queuing_ms, std::optional<double> e2e_ms = {}) {
  PacketRecord r;
  r.seq = seq;
  r.sent_at = at_ms(std::max(0.0, delivered_ms - 10));
  r.delivered_at = at_ms(delivered_ms);
  r.queuing_delay = from_ms(queuing_ms);
  r.size_bytes = 1500;
  if (e2e_ms) r.e2e_rtt = from_ms(*e2e_ms);
  return r;
}

}  // namespace

TEST(Summarize, ThroughputArithmetic) {
  std::vector<PacketRecord> recs;
  for (int i = 0; i < 1000; ++i) recs.push_back(record(static_cast<std::uint64_t>(i), i, 0));
  const auto s = summarize(recs, seconds{1});
  EXPECT_DOUBLE_EQ(s.throughput_mbps, 12.0);
  EXPECT_EQ(s.delivered_packets, 1000u);
}

TEST(Summarize, ZeroDelays) {
  std::vector<PacketRecord> recs;
  for (int i = 0; i < 50; ++i) recs.push_back(record(static_cast<std::uint64_t>(i), i, 0, 20.0));
  const auto s = summarize(recs, seconds{1});
  EXPECT_EQ(s.avg_queuing_delay_ms, 0.0);
  EXPECT_EQ(s.p95_queuing_delay_ms, 0.0);
  EXPECT_EQ(s.queuing_jitter_ms, 0.0);
  EXPECT_EQ(s.jitter_ms, 0.0);
  EXPECT_DOUBLE_EQ(s.avg_e2e_delay_ms, 20.0);
}

TEST(Summarize, NearestRankP95) {
  std::vector<PacketRecord> recs;
  for (int d = 100; d >= 1; --d) recs.push_back(record(static_cast<std::uint64_t>(d), 100 - d, d));
  const auto s = summarize(recs, seconds{1});
  EXPECT_DOUBLE_EQ(s.p95_queuing_delay_ms, 95.0);
  EXPECT_DOUBLE_EQ(s.avg_queuing_delay_ms, 50.5);
}

TEST(Summarize, RejectsEmptyOrZeroSpan) {
  EXPECT_THROW(summarize({}, seconds{1}), std::invalid_argument);
  std::vector<PacketRecord> one{record(0, 1, 1)};
  EXPECT_THROW(summarize(one, Duration{0}), std::invalid_argument);
}

TEST(Summarize, PermutationInvariantExceptJitter) {
  std::mt19937_64 rng(8);
  std::vector<PacketRecord> recs;
  for (int i = 0; i < 500; ++i) {
    recs.push_back(record(static_cast<std::uint64_t>(i), i, static_cast<double>(rng() % 80), 20.0 + rng() % 80));
  }
  const auto a = summarize(recs, seconds{1});
  std::shuffle(recs.begin(), recs.end(), rng);
  const auto b = summarize(recs, seconds{1});
  EXPECT_DOUBLE_EQ(a.throughput_mbps, b.throughput_mbps);
  EXPECT_NEAR(a.avg_queuing_delay_ms, b.avg_queuing_delay_ms, 1e-9);
  EXPECT_DOUBLE_EQ(a.p95_queuing_delay_ms, b.p95_queuing_delay_ms);
  EXPECT_NEAR(a.avg_e2e_delay_ms, b.avg_e2e_delay_ms, 1e-9);
  EXPECT_DOUBLE_EQ(a.p95_e2e_delay_ms, b.p95_e2e_delay_ms);
}

TEST(Percentile, MatchesFullSortOracle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % (trial < 190 ? 2000 : 100'000);
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(rng() % 100'000) / 7.0;
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
    EXPECT_EQ(percentile(v, 0.95), sorted[rank - 1]);
    EXPECT_EQ(percentile(v, 1.0), sorted.back());
  }
  EXPECT_THROW(percentile({}, 0.95), std::invalid_argument);
  EXPECT_THROW(percentile({1.0}, 0.0), std::invalid_argument);
}

TEST(Jitter, ConstantAndSingle) {
  const std::vector<double> constant(100, 42.0);
  EXPECT_EQ(jitter(constant), 0.0);
  const std::vector<double> single{17.0};
  EXPECT_EQ(jitter(single), 0.0);
  EXPECT_EQ(jitter(std::vector<double>{}), 0.0);
}

// Reference values from tests/oracles/jitter_oracle.py (exact rationals).
TEST(Jitter, OracleValues) {
  std::vector<double> alt;
  for (int i = 0; i < 1000; ++i) alt.push_back(i % 2 == 0 ? 20.0 : 40.0);
  EXPECT_NEAR(jitter(alt), 10.628977777777777, 1e-9);
  // Fixed point of the recurrences for a 20/40 alternation.
  std::vector<double> long_alt;
  for (int i = 0; i < 200'000; ++i) long_alt.push_back(i % 2 == 0 ? 20.0 : 40.0);
  EXPECT_NEAR(jitter(long_alt), 10.666666666666666, 1e-3);
  EXPECT_NEAR(jitter(std::vector<double>{10, 20, 30}), 3.0208333333333335, 1e-12);
}

TEST(Jain, Examples) {
  EXPECT_DOUBLE_EQ(jain_index(std::vector<double>{5, 5}), 1.0);
  EXPECT_NEAR(jain_index(std::vector<double>{10, 1e-9}), 0.5, 1e-9);
  EXPECT_DOUBLE_EQ(jain_index(std::vector<double>{3, 3, 3, 3}), 1.0);
  EXPECT_NEAR(jain_index(std::vector<double>{1, 3}), 16.0 / 20.0, 1e-12);
  EXPECT_THROW(jain_index(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(jain_index(std::vector<double>{0, 0}), std::invalid_argument);
  EXPECT_THROW(jain_index(std::vector<double>{1, -1}), std::invalid_argument);
}

TEST(Jain, InUnitInterval) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> x(1 + rng() % 10);
    for (auto& v : x) v = static_cast<double>(rng() % 1000);
    x[0] += 1;
    const double j = jain_index(x);
    EXPECT_GT(j, 0.0);
    EXPECT_LE(j, 1.0 + 1e-12);
  }
}

TEST(PerSecondSeries, Bins) {
  std::vector<PacketRecord> recs{record(0, 100, 2), record(1, 900, 4), record(2, 1500, 6), record(3, 5000, 1)};
  const auto s = per_second_series(recs, milliseconds{2500});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(s[0].throughput_mbps, 2 * 1500 * 8 / 1e6);
  EXPECT_DOUBLE_EQ(s[0].avg_queuing_delay_ms, 3.0);
  EXPECT_DOUBLE_EQ(s[1].avg_queuing_delay_ms, 6.0);
  EXPECT_DOUBLE_EQ(s[2].throughput_mbps, 0.0);
}
