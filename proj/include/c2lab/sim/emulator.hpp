#pragma once

// Trace-driven bottleneck emulation: sender -> bottleneck queue -> downlink
// served at trace delivery opportunities -> propagation -> receiver, with acks
// returning over a fixed-delay (or trace-driven) uplink.

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "c2lab/cc/c2tcp.hpp"
#include "c2lab/metrics.hpp"
#include "c2lab/sim/bottleneck_queue.hpp"
#include "c2lab/sim/event_queue.hpp"
#include "c2lab/sim/tcp.hpp"
#include "c2lab/trace.hpp"
#include "c2lab/units.hpp"

namespace c2lab::sim {

enum class Aqm { DropTail, CoDel };
enum class QueueMode { PerFlow, Shared };

struct EmuConfig {
  LinkTrace trace;
  std::int64_t buffer_bytes = 150'000;
  Duration base_rtt = std::chrono::milliseconds{20};
  std::int32_t mtu_bytes = 1500;
  Aqm aqm = Aqm::DropTail;
  Duration codel_target = std::chrono::milliseconds{5};
  Duration codel_interval = std::chrono::milliseconds{100};
  /// Unset: fixed-delay, lossless, infinite-rate ack path.
  std::optional<LinkTrace> uplink_trace;
  QueueMode queue_mode = QueueMode::PerFlow;

  Duration downlink_delay() const { return base_rtt / 2; }
  Duration uplink_delay() const { return base_rtt - base_rtt / 2; }

  void validate() const {
    if (trace.opportunities_ms.empty()) throw ConfigError("emulator: empty trace");
    if (trace.period_ms() <= 0) throw ConfigError("emulator: trace period must be positive");
    if (uplink_trace && (uplink_trace->opportunities_ms.empty() || uplink_trace->period_ms() <= 0)) {
      throw ConfigError("emulator: invalid uplink trace");
    }
    if (mtu_bytes <= 0 || mtu_bytes > kOpportunityBytes) {
      throw ConfigError("emulator: mtu must be in (0, " + std::to_string(kOpportunityBytes) + "]");
    }
    if (buffer_bytes < mtu_bytes) throw ConfigError("emulator: buffer must hold at least one mtu");
    if (base_rtt.count() <= 0) throw ConfigError("emulator: base_rtt must be positive");
    if (aqm == Aqm::CoDel && (codel_target.count() <= 0 || codel_interval.count() <= 0)) {
      throw ConfigError("emulator: CoDel target and interval must be positive");
    }
  }
};

struct FlowSpec {
  cc::FlowConfig cc;
  SimTime start_at = kSimStart;
  /// Unset: runs until the end.
  std::optional<SimTime> stop_at;
  std::string label;
};

struct FlowResult {
  int flow_id = 0;
  std::string label;
  SenderStats sender;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight_at_end = 0;
  std::size_t link = 0;
  cc::FlowState final_state;
  /// (time, alpha) after every tuning cycle, C2TCP flows only.
  std::vector<std::pair<SimTime, double>> alpha_trace;
};

struct LinkResult {
  std::uint64_t opportunities = 0;
  std::uint64_t used = 0;
};

struct RunResult {
  Duration duration{};
  Duration downlink_delay{};
  std::vector<PacketRecord> records;
  std::vector<FlowResult> flows;
  std::vector<LinkResult> links;
};

class Emulator {
 public:
  Emulator(EmuConfig config, std::vector<FlowSpec> flows, Duration duration)
      : config_(std::move(config)), specs_(std::move(flows)), end_(kSimStart + duration) {
    if (specs_.empty()) throw ConfigError("emulator: at least one flow is required");
    if (duration.count() <= 0) throw ConfigError("emulator: duration must be positive");
    config_.validate();
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const auto& s = specs_[i];
      if (s.start_at < kSimStart) throw ConfigError("emulator: flow start must be >= 0");
      if (s.stop_at && *s.stop_at <= s.start_at) throw ConfigError("emulator: flow stop must follow start");
    }
  }

  RunResult run() {
    setup();
    while (!events_.empty() && events_.next_time() < end_) {
      auto entry = events_.pop();
      now_ = entry.at;
      std::visit([this](auto& ev) { handle(ev); }, entry.event);
    }
    return finish();
  }

  /// Sends the head of `link`'s queue, if any, on an opportunity at `now`.
  /// Unused opportunities are lost.
  std::optional<Packet> deliver_on_opportunity(std::size_t link, SimTime now) {
    auto& l = links_[link];
    std::vector<Packet> dropped;
    auto pkt = l.queue.dequeue(now, dropped);
    for (const auto& d : dropped) ++flows_[static_cast<std::size_t>(d.flow_id)].dropped;
    if (pkt) {
      ++l.used;
      pending_.push_back(PendingDelivery{*pkt, now});
      events_.push(now + config_.downlink_delay(), DataArrival{pending_.size() - 1});
    }
    return pkt;
  }

 private:
  struct Opportunity { std::size_t link; };
  struct UplinkOpportunity { std::size_t link; };
  struct DataArrival { std::size_t pending; };
  struct AckArrival { Ack ack; };
  struct RtoFire { int flow; std::uint64_t generation; };
  struct TunerTick { int flow; };
  struct FlowStart { int flow; };
  struct FlowStop { int flow; };
  using Event = std::variant<Opportunity, UplinkOpportunity, DataArrival, AckArrival, RtoFire,
                             TunerTick, FlowStart, FlowStop>;

  struct PendingDelivery {
    Packet packet;
    SimTime dequeued_at;
  };

  struct Link {
    explicit Link(BottleneckQueue q) : queue(std::move(q)) {}
    BottleneckQueue queue;
    std::uint64_t next_index = 0;
    std::uint64_t offered = 0;
    std::uint64_t used = 0;
    std::deque<Ack> uplink;
    std::uint64_t uplink_next_index = 0;
  };

  struct FlowRuntime {
    FlowRuntime(Sender s, Receiver r, std::size_t l) : sender(std::move(s)), receiver(std::move(r)), link(l) {}
    Sender sender;
    Receiver receiver;
    std::size_t link = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped = 0;
    std::uint64_t scheduled_generation = ~std::uint64_t{0};
    std::vector<std::pair<SimTime, double>> alpha_trace;
  };

  void setup() {
    const std::size_t n_links = config_.queue_mode == QueueMode::Shared ? 1 : specs_.size();
    std::optional<CodelParams> codel;
    if (config_.aqm == Aqm::CoDel) {
      codel = CodelParams{config_.codel_target, config_.codel_interval, config_.mtu_bytes};
    }
    for (std::size_t i = 0; i < n_links; ++i) {
      links_.emplace_back(BottleneckQueue(config_.buffer_bytes, codel));
      schedule_opportunity(i);
      if (config_.uplink_trace) schedule_uplink_opportunity(i);
    }
    for (std::size_t i = 0; i < specs_.size(); ++i) {
      const int id = static_cast<int>(i);
      flows_.emplace_back(Sender(id, specs_[i].cc, config_.mtu_bytes), Receiver(id),
                          config_.queue_mode == QueueMode::Shared ? 0 : i);
      events_.push(specs_[i].start_at, FlowStart{id});
      if (specs_[i].stop_at) events_.push(*specs_[i].stop_at, FlowStop{id});
    }
  }

  void schedule_opportunity(std::size_t link) {
    auto& l = links_[link];
    const SimTime at = config_.trace.opportunity_at(l.next_index++);
    if (at < end_) events_.push(at, Opportunity{link});
  }

  void schedule_uplink_opportunity(std::size_t link) {
    auto& l = links_[link];
    const SimTime at = config_.uplink_trace->opportunity_at(l.uplink_next_index++);
    if (at < end_) events_.push(at, UplinkOpportunity{link});
  }

  void transmit(FlowRuntime& f, std::vector<Packet>& out) {
    for (auto& pkt : out) {
      auto& q = links_[f.link].queue;
      if (q.enqueue(pkt, now_) == EnqueueResult::Dropped) ++f.dropped;
    }
    out.clear();
    sync_rto(f);
  }

  void sync_rto(FlowRuntime& f) {
    const auto gen = f.sender.rto_generation();
    if (gen == f.scheduled_generation) return;
    f.scheduled_generation = gen;
    if (auto deadline = f.sender.rto_deadline()) {
      events_.push(*deadline, RtoFire{f.sender.flow_id(), gen});
    }
  }

  void handle(const Opportunity& ev) {
    ++links_[ev.link].offered;
    deliver_on_opportunity(ev.link, now_);
    schedule_opportunity(ev.link);
  }

  void handle(const UplinkOpportunity& ev) {
    auto& l = links_[ev.link];
    if (!l.uplink.empty()) {
      events_.push(now_ + config_.uplink_delay(), AckArrival{l.uplink.front()});
      l.uplink.pop_front();
    }
    schedule_uplink_opportunity(ev.link);
  }

  void handle(const DataArrival& ev) {
    const auto& pd = pending_[ev.pending];
    const Packet& pkt = pd.packet;
    auto& f = flows_[static_cast<std::size_t>(pkt.flow_id)];
    ++f.delivered;
    PacketRecord rec;
    rec.flow_id = pkt.flow_id;
    rec.seq = pkt.seq;
    rec.sent_at = pkt.sent_at;
    rec.delivered_at = now_;
    rec.queuing_delay = pd.dequeued_at - pkt.enqueued_at;
    rec.size_bytes = pkt.size_bytes;
    records_.push_back(rec);
    const Ack ack = f.receiver.on_data(pkt, records_.size() - 1);
    if (config_.uplink_trace) {
      links_[f.link].uplink.push_back(ack);
    } else {
      events_.push(now_ + config_.uplink_delay(), AckArrival{ack});
    }
  }

  void handle(const AckArrival& ev) {
    records_[ev.ack.record].e2e_rtt = now_ - ev.ack.echo_sent_at;
    auto& f = flows_[static_cast<std::size_t>(ev.ack.flow_id)];
    std::vector<Packet> out;
    f.sender.on_ack(ev.ack, now_, out);
    transmit(f, out);
  }

  void handle(const RtoFire& ev) {
    auto& f = flows_[static_cast<std::size_t>(ev.flow)];
    std::vector<Packet> out;
    f.sender.on_rto(ev.generation, now_, out);
    transmit(f, out);
  }

  void handle(const TunerTick& ev) {
    auto& f = flows_[static_cast<std::size_t>(ev.flow)];
    if (!f.sender.active()) return;
    f.sender.tuner_tick(now_);
    f.alpha_trace.emplace_back(now_, f.sender.cc().c2tcp->alpha);
    events_.push(now_ + cc::kTuningCycle, TunerTick{ev.flow});
  }

  void handle(const FlowStart& ev) {
    auto& f = flows_[static_cast<std::size_t>(ev.flow)];
    std::vector<Packet> out;
    f.sender.start(now_, out);
    transmit(f, out);
    if (f.sender.cc().c2tcp) events_.push(now_ + cc::kTuningCycle, TunerTick{ev.flow});
  }

  void handle(const FlowStop& ev) {
    auto& f = flows_[static_cast<std::size_t>(ev.flow)];
    f.sender.stop();
    f.scheduled_generation = f.sender.rto_generation();
  }

  RunResult finish() {
    RunResult r;
    r.duration = end_ - kSimStart;
    r.downlink_delay = config_.downlink_delay();
    std::vector<std::uint64_t> in_flight(flows_.size(), 0);
    for (const auto& l : links_) {
      for (const auto& p : l.queue.contents()) ++in_flight[static_cast<std::size_t>(p.flow_id)];
    }
    events_.for_each([&](SimTime, const Event& ev) {
      if (const auto* d = std::get_if<DataArrival>(&ev)) {
        ++in_flight[static_cast<std::size_t>(pending_[d->pending].packet.flow_id)];
      }
    });
    for (std::size_t i = 0; i < flows_.size(); ++i) {
      auto& f = flows_[i];
      FlowResult fr;
      fr.flow_id = static_cast<int>(i);
      fr.label = specs_[i].label;
      fr.sender = f.sender.stats();
      fr.delivered = f.delivered;
      fr.dropped = f.dropped;
      fr.in_flight_at_end = in_flight[i];
      fr.link = f.link;
      fr.final_state = f.sender.cc();
      fr.alpha_trace = std::move(f.alpha_trace);
      r.flows.push_back(std::move(fr));
    }
    for (const auto& l : links_) r.links.push_back(LinkResult{l.offered, l.used});
    r.records = std::move(records_);
    return r;
  }

  EmuConfig config_;
  std::vector<FlowSpec> specs_;
  SimTime end_;
  SimTime now_ = kSimStart;
  EventQueue<Event> events_;
  std::vector<Link> links_;
  std::vector<FlowRuntime> flows_;
  std::vector<PendingDelivery> pending_;
  std::vector<PacketRecord> records_;
};

/// Runs one emulation to completion.
inline RunResult run(EmuConfig config, std::vector<FlowSpec> flows, Duration duration) {
  return Emulator(std::move(config), std::move(flows), duration).run();
}

}  // namespace c2lab::sim
