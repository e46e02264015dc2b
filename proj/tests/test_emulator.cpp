#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "c2lab/sim/emulator.hpp"

using namespace c2lab;
using namespace c2lab::sim;
using std::chrono::milliseconds;
using std::chrono::seconds;

namespace {

Packet packet(std::uint64_t seq, std::int32_t size = 1500, int flow = 0) {
  Packet p;
  p.flow_id = flow;
  p.seq = seq;
  p.xmit = seq;
  p.size_bytes = size;
  return p;
}

EmuConfig constant_link(double mbps, std::int64_t buffer = 150'000) {
  EmuConfig c;
  c.trace = gen_constant(mbps, seconds{1});
  c.buffer_bytes = buffer;
  return c;
}

FlowSpec flow(cc::Flavor flavor, std::optional<double> target_ms = {}, double start_s = 0) {
  FlowSpec f;
  f.cc.flavor = flavor;
  if (target_ms) f.cc.c2tcp_target = from_ms(*target_ms);
  f.start_at = kSimStart + from_ms(start_s * 1000);
  return f;
}

}  // namespace

// ---- queue --------------------------------------------------------------

TEST(BottleneckQueue, EnqueueBoundaries) {
  BottleneckQueue empty(150'000);
  EXPECT_EQ(empty.enqueue(packet(0), at_ms(0)), EnqueueResult::Accepted);

  BottleneckQueue q(150'000);
  ASSERT_EQ(q.enqueue(packet(0, 149'000), at_ms(0)), EnqueueResult::Accepted);
  EXPECT_EQ(q.enqueue(packet(1), at_ms(0)), EnqueueResult::Dropped);
  EXPECT_EQ(q.occupied_bytes(), 149'000);

  BottleneckQueue fits(150'000);
  ASSERT_EQ(fits.enqueue(packet(0, 148'500), at_ms(0)), EnqueueResult::Accepted);
  EXPECT_EQ(fits.enqueue(packet(1), at_ms(0)), EnqueueResult::Accepted);
  EXPECT_EQ(fits.occupied_bytes(), 150'000);
}

TEST(BottleneckQueue, FifoAndEmpty) {
  BottleneckQueue q(15'000);
  std::vector<Packet> dropped;
  EXPECT_FALSE(q.dequeue(at_ms(0), dropped).has_value());
  for (std::uint64_t i = 0; i < 5; ++i) q.enqueue(packet(i), at_ms(static_cast<double>(i)));
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto p = q.dequeue(at_ms(10), dropped);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->seq, i);
    EXPECT_EQ(p->enqueued_at, at_ms(static_cast<double>(i)));
  }
  EXPECT_TRUE(dropped.empty());
  EXPECT_EQ(q.occupied_bytes(), 0);
}

// ---- CoDel --------------------------------------------------------------

TEST(Codel, NoDropsBelowTarget) {
  Codel codel;
  for (int ms = 0; ms < 5000; ++ms) {
    Packet p = packet(static_cast<std::uint64_t>(ms));
    p.enqueued_at = at_ms(ms - 4.9);
    ASSERT_EQ(codel.decide(p, at_ms(ms), 30'000), CodelVerdict::Forward);
  }
}

TEST(Codel, PersistentSojournDropSchedule) {
  Codel codel;
  const double t0 = 1000;
  std::vector<double> drops;
  std::vector<SimTime> drop_next;
  for (int ms = 0; ms < 400; ++ms) {
    const double now = t0 + ms;
    Packet p = packet(static_cast<std::uint64_t>(ms));
    p.enqueued_at = at_ms(now - 50);
    if (codel.decide(p, at_ms(now), 30'000) == CodelVerdict::Drop) {
      drops.push_back(now - t0);
      drop_next.push_back(codel.drop_next());
    }
  }
  ASSERT_GE(drops.size(), 4u);
  // First drop once the sojourn has stayed above target for one interval.
  EXPECT_DOUBLE_EQ(drops[0], 100.0);
  EXPECT_DOUBLE_EQ(drops[1], 200.0);
  // After the first drop of a dropping state the gap shrinks by sqrt(count).
  EXPECT_EQ(drop_next[1] - at_ms(t0 + 200), std::chrono::duration_cast<Duration>(FineDuration{100'000.0 / std::sqrt(2.0)}));
  EXPECT_DOUBLE_EQ(drops[2], 271.0);
  EXPECT_EQ(drop_next[2] - drop_next[1], std::chrono::duration_cast<Duration>(FineDuration{100'000.0 / std::sqrt(3.0)}));
}

TEST(Codel, NeverDropsWithOnePacketBacklog) {
  Codel codel;
  for (int ms = 0; ms < 1000; ++ms) {
    Packet p = packet(static_cast<std::uint64_t>(ms));
    p.enqueued_at = at_ms(ms - 80.0);
    ASSERT_EQ(codel.decide(p, at_ms(ms), 1500), CodelVerdict::Forward);
  }
}

TEST(Codel, ExitsDroppingWhenSojournFalls) {
  Codel codel;
  for (int ms = 0; ms <= 100; ++ms) {
    Packet p = packet(static_cast<std::uint64_t>(ms));
    p.enqueued_at = at_ms(ms - 50.0);
    codel.decide(p, at_ms(ms), 30'000);
  }
  ASSERT_TRUE(codel.dropping());
  Packet p = packet(999);
  p.enqueued_at = at_ms(100);
  EXPECT_EQ(codel.decide(p, at_ms(101), 30'000), CodelVerdict::Forward);
  EXPECT_FALSE(codel.dropping());
}

// ---- TCP endpoints -------------------------------------------------------

TEST(Receiver, CumulativeAcks) {
  Receiver r(0);
  EXPECT_EQ(r.on_data(packet(0), 0).ackno, 1u);
  EXPECT_EQ(r.on_data(packet(2), 1).ackno, 1u);
  EXPECT_EQ(r.on_data(packet(3), 2).ackno, 1u);
  const auto a = r.on_data(packet(1), 3);
  EXPECT_EQ(a.ackno, 4u);
  EXPECT_EQ(a.echo_seq, 1u);
  EXPECT_EQ(r.out_of_order(), 0u);
}

TEST(Sender, ThreeLaterAcksTriggerFastRetransmit) {
  Sender s(0, cc::FlowConfig{}, 1500);
  Receiver r(0);
  std::vector<Packet> wire;
  s.start(at_ms(0), wire);
  ASSERT_EQ(wire.size(), 10u);
  bool dropped_once = false;
  std::vector<Packet> retransmitted;
  double now = 10;
  for (int round = 0; round < 200 && s.snd_una() < 40; ++round) {
    std::vector<Packet> next;
    for (const auto& p : wire) {
      if (p.seq == 0 && !dropped_once) {
        dropped_once = true;
        continue;
      }
      if (p.retransmission) retransmitted.push_back(p);
      now += 0.1;
      s.on_ack(r.on_data(p, 0), at_ms(now), next);
    }
    wire = std::move(next);
  }
  EXPECT_GE(s.snd_una(), 40u);
  ASSERT_EQ(retransmitted.size(), 1u);
  EXPECT_EQ(retransmitted[0].seq, 0u);
  EXPECT_EQ(s.stats().fast_retransmits, 1u);
  EXPECT_EQ(s.stats().timeouts, 0u);
}

TEST(Sender, TimeoutRetransmitsWithUnitWindow) {
  Sender s(0, cc::FlowConfig{}, 1500);
  std::vector<Packet> wire;
  s.start(at_ms(0), wire);
  EXPECT_EQ(s.rto(), seconds{1});
  ASSERT_TRUE(s.rto_deadline());
  EXPECT_EQ(*s.rto_deadline(), at_ms(1000));
  std::vector<Packet> out;
  EXPECT_FALSE(s.on_rto(s.rto_generation() + 1, at_ms(1000), out));
  ASSERT_TRUE(s.on_rto(s.rto_generation(), at_ms(1000), out));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_TRUE(out[0].retransmission);
  EXPECT_EQ(out[0].seq, 0u);
  EXPECT_DOUBLE_EQ(s.cc().loss.cwnd, 1.0);
  EXPECT_EQ(s.rto(), seconds{2});
  EXPECT_EQ(s.stats().timeouts, 1u);
}

TEST(Sender, RtoFloor) {
  Sender s(0, cc::FlowConfig{}, 1500);
  Receiver r(0);
  std::vector<Packet> wire;
  s.start(at_ms(0), wire);
  std::vector<Packet> out;
  s.on_ack(r.on_data(wire[0], 0), at_ms(20), out);
  EXPECT_EQ(s.rto(), milliseconds{200});
}

// ---- emulator -----------------------------------------------------------

TEST(Emulator, RejectsInvalidSetups) {
  EXPECT_THROW(run(constant_link(12), {}, seconds{1}), ConfigError);
  EXPECT_THROW(run(constant_link(12), {flow(cc::Flavor::NewReno)}, Duration{0}), ConfigError);
  auto bad_buffer = constant_link(12, 1000);
  EXPECT_THROW(run(bad_buffer, {flow(cc::Flavor::NewReno)}, seconds{1}), ConfigError);
  auto stop_before = flow(cc::Flavor::NewReno, {}, 2);
  stop_before.stop_at = at_ms(1000);
  EXPECT_THROW(run(constant_link(12), {stop_before}, seconds{5}), ConfigError);
}

TEST(Emulator, FirstPacketTiming) {
  const auto r = run(constant_link(12), {flow(cc::Flavor::NewReno)}, milliseconds{100});
  ASSERT_FALSE(r.records.empty());
  const auto& first = r.records.front();
  // Opportunity at 1 ms, then half the base RTT of propagation.
  EXPECT_EQ(first.delivered_at, at_ms(11));
  EXPECT_EQ(first.queuing_delay, milliseconds{1});
  EXPECT_EQ(*first.e2e_rtt, milliseconds{21});
}

TEST(Emulator, RepeatedTimestampCarriesTwoPackets) {
  const auto r = run(constant_link(24), {flow(cc::Flavor::NewReno)}, milliseconds{100});
  ASSERT_GE(r.records.size(), 2u);
  EXPECT_EQ(r.records[0].delivered_at, at_ms(11));
  EXPECT_EQ(r.records[1].delivered_at, at_ms(11));
}

TEST(Emulator, NewRenoFillsTwelveMbpsWithBoundedQueue) {
  const auto r = run(constant_link(12), {flow(cc::Flavor::NewReno)}, seconds{60});
  std::vector<PacketRecord> after;
  for (const auto& rec : r.records) {
    if (rec.delivered_at >= at_ms(2000)) after.push_back(rec);
  }
  const auto s = summarize(after, seconds{58});
  EXPECT_NEAR(s.throughput_mbps, 12.0, 0.3);
  for (const auto& rec : r.records) ASSERT_LE(rec.queuing_delay, milliseconds{101});
}

namespace {

void check_invariants(const EmuConfig& config, const RunResult& r) {
  // Conservation.
  for (const auto& f : r.flows) {
    EXPECT_EQ(f.sender.transmissions, f.delivered + f.dropped + f.in_flight_at_end) << f.label;
  }
  // FIFO per link: departures in enqueue order, arrivals in departure order.
  std::map<std::size_t, std::pair<SimTime, SimTime>> last;
  for (const auto& rec : r.records) {
    const auto link = r.flows[static_cast<std::size_t>(rec.flow_id)].link;
    const SimTime departed = rec.delivered_at - r.downlink_delay;
    const SimTime enqueued = departed - rec.queuing_delay;
    EXPECT_GE(rec.queuing_delay.count(), 0);
    EXPECT_GE(rec.delivered_at, rec.sent_at);
    auto it = last.find(link);
    if (it != last.end()) {
      EXPECT_GE(departed, it->second.first);
      EXPECT_GE(enqueued, it->second.second);
    }
    last[link] = {departed, enqueued};
    // Delay decomposition on a fixed-delay ack path.
    if (rec.e2e_rtt && !config.uplink_trace) {
      EXPECT_EQ(*rec.e2e_rtt, config.base_rtt + rec.queuing_delay);
    }
  }
  // Capacity obedience in 100 ms windows.
  const auto end = kSimStart + r.duration;
  std::map<std::pair<std::size_t, std::int64_t>, std::uint64_t> per_window;
  for (const auto& rec : r.records) {
    const auto link = r.flows[static_cast<std::size_t>(rec.flow_id)].link;
    per_window[{link, to_us(rec.delivered_at - r.downlink_delay) / 100'000}] += 1;
  }
  for (const auto& [key, count] : per_window) {
    const auto from = kSimStart + Duration{key.second * 100'000};
    const auto to = std::min(end, from + milliseconds{100});
    EXPECT_LE(count, config.trace.opportunities_between(from, to));
  }
}

}  // namespace

TEST(Emulator, InvariantsOnVariableTraceMixedFlows) {
  EmuConfig c;
  c.trace = gen_variable(VariableTraceParams{.seed = 3, .duration = seconds{20}, .min_mbps = 0.5,
                                             .max_mbps = 30, .volatility = 0.5});
  c.buffer_bytes = 60'000;
  std::vector<FlowSpec> flows{flow(cc::Flavor::Cubic), flow(cc::Flavor::NewReno, 50.0, 1.5),
                              flow(cc::Flavor::Cubic, 30.0, 3)};
  flows[2].stop_at = at_ms(15'000);
  const auto r = run(c, flows, seconds{20});
  check_invariants(c, r);
}

TEST(Emulator, InvariantsOnSharedQueueWithCodel) {
  auto c = constant_link(24, 60'000);
  c.queue_mode = QueueMode::Shared;
  c.aqm = Aqm::CoDel;
  const auto r = run(c, {flow(cc::Flavor::Cubic), flow(cc::Flavor::NewReno, 80.0, 5)}, seconds{20});
  ASSERT_EQ(r.links.size(), 1u);
  check_invariants(c, r);
  std::uint64_t dropped = 0;
  for (const auto& f : r.flows) dropped += f.dropped;
  EXPECT_GT(dropped, 0u);
}

TEST(Emulator, UplinkTraceDelaysAcks) {
  auto c = constant_link(12);
  c.uplink_trace = gen_constant(2, seconds{1});
  const auto r = run(c, {flow(cc::Flavor::NewReno)}, seconds{5});
  check_invariants(c, r);
  bool slower = false;
  for (const auto& rec : r.records) {
    if (rec.e2e_rtt && *rec.e2e_rtt > c.base_rtt + rec.queuing_delay) slower = true;
  }
  EXPECT_TRUE(slower);
}

TEST(Emulator, Deterministic) {
  EmuConfig c;
  c.trace = gen_variable(VariableTraceParams{.seed = 8, .duration = seconds{10}});
  const std::vector<FlowSpec> flows{flow(cc::Flavor::Cubic, 50.0), flow(cc::Flavor::NewReno, {}, 2)};
  const auto a = run(c, flows, seconds{10});
  const auto b = run(c, flows, seconds{10});
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    ASSERT_EQ(a.records[i].seq, b.records[i].seq);
    ASSERT_EQ(a.records[i].flow_id, b.records[i].flow_id);
    ASSERT_EQ(a.records[i].delivered_at, b.records[i].delivered_at);
    ASSERT_EQ(a.records[i].e2e_rtt, b.records[i].e2e_rtt);
  }
  EXPECT_EQ(a.flows[0].alpha_trace, b.flows[0].alpha_trace);
}

TEST(Emulator, C2tcpKeepsQueueBelowCubic) {
  const auto c = constant_link(12);
  auto avg_queuing = [&](const FlowSpec& f) {
    const auto r = run(c, {f}, seconds{30});
    std::vector<PacketRecord> after;
    for (const auto& rec : r.records) {
      if (rec.delivered_at >= at_ms(2000)) after.push_back(rec);
    }
    return summarize(after, seconds{28}).avg_queuing_delay_ms;
  };
  EXPECT_LT(avg_queuing(flow(cc::Flavor::Cubic, 50.0)), avg_queuing(flow(cc::Flavor::Cubic)));
}
