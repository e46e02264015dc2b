#pragma once

// Bulk-transfer TCP endpoints for the emulator. The receiver acks every data
// packet cumulatively and echoes which transmission triggered the ack.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <vector>

#include "c2lab/cc/c2tcp.hpp"
#include "c2lab/sim/bottleneck_queue.hpp"
#include "c2lab/units.hpp"

namespace c2lab::sim {

inline constexpr Duration kMinRto = std::chrono::milliseconds{200};
inline constexpr Duration kInitialRto = std::chrono::seconds{1};
inline constexpr Duration kMaxRto = std::chrono::seconds{60};

struct Ack {
  int flow_id = 0;
  /// Next in-order sequence number expected by the receiver.
  std::uint64_t ackno = 0;
  /// Sequence number and transmission id of the data packet that triggered
  /// this ack, and that packet's send time.
  std::uint64_t echo_seq = 0;
  std::uint64_t echo_xmit = 0;
  SimTime echo_sent_at{};
  /// Index of that packet's PacketRecord.
  std::size_t record = 0;
};

class Receiver {
 public:
  explicit Receiver(int flow_id) : flow_id_(flow_id) {}

  Ack on_data(const Packet& pkt, std::size_t record) {
    if (pkt.seq == rcv_nxt_) {
      ++rcv_nxt_;
      while (!out_of_order_.empty() && *out_of_order_.begin() == rcv_nxt_) {
        out_of_order_.erase(out_of_order_.begin());
        ++rcv_nxt_;
      }
    } else if (pkt.seq > rcv_nxt_) {
      out_of_order_.insert(pkt.seq);
    }
    return Ack{flow_id_, rcv_nxt_, pkt.seq, pkt.xmit, pkt.sent_at, record};
  }

  std::uint64_t rcv_nxt() const { return rcv_nxt_; }
  std::size_t out_of_order() const { return out_of_order_.size(); }

 private:
  int flow_id_;
  std::uint64_t rcv_nxt_ = 0;
  std::set<std::uint64_t> out_of_order_;
};

struct SenderStats {
  std::uint64_t transmissions = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t fast_retransmits = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t good = 0;
  std::uint64_t normal = 0;
  std::uint64_t bad = 0;
};

/// Bulk sender. Every ack names the transmission that triggered it, so on a
/// FIFO path the sender knows that all earlier transmissions were either
/// delivered or dropped. A transmission not delivered when three later ones
/// have been acked is declared lost (the three-duplicate-ack rule); the first
/// such loss after the recovery point enters Recovery. Lost packets are
/// retransmitted ahead of new data, both gated by the congestion window.
class Sender {
 public:
  /// Acks after which an undelivered earlier transmission is declared lost.
  static constexpr std::uint64_t kDupThresh = 3;

  Sender(int flow_id, const cc::FlowConfig& cc_config, std::int32_t packet_bytes)
      : flow_id_(flow_id), packet_bytes_(packet_bytes), cc_(cc::make_flow(cc_config)) {}

  void start(SimTime now, std::vector<Packet>& out) {
    active_ = true;
    pump(now, out);
  }

  void stop() {
    active_ = false;
    rto_deadline_.reset();
    ++rto_generation_;
  }

  void on_ack(const Ack& ack, SimTime now, std::vector<Packet>& out) {
    if (!active_) return;
    ++ack_count_;
    const Duration rtt = std::max(now - ack.echo_sent_at, Duration{1});
    update_rto_estimate(rtt);

    int newly_acked = mark_acked(ack.echo_seq) ? 1 : 0;
    const bool advanced = ack.ackno > snd_una_;
    for (; snd_una_ < ack.ackno; ++snd_una_) newly_acked += mark_acked(snd_una_) ? 1 : 0;

    settle_transmissions(ack.echo_xmit, now);

    if (in_recovery_ && snd_una_ >= recover_) {
      in_recovery_ = false;
      cc::loss_based_exit_recovery(cc_.loss);
    }
    if (newly_acked > 0) {
      const auto report = cc::on_ack(cc_, cc::AckSample{rtt, now, newly_acked, pipe()});
      if (report && report->detected) {
        switch (*report->detected) {
          case cc::Condition::Good: ++stats_.good; break;
          case cc::Condition::Normal: ++stats_.normal; break;
          case cc::Condition::Bad: ++stats_.bad; break;
        }
      }
    }
    if (snd_una_ >= snd_nxt_) {
      disarm_rto();
    } else if (advanced) {
      rto_backoff_ = 1;
      arm_rto(now);
    }
    pump(now, out);
  }

  /// Returns false for a stale timer generation.
  bool on_rto(std::uint64_t generation, SimTime now, std::vector<Packet>& out) {
    if (!active_ || generation != rto_generation_ || !rto_deadline_) return false;
    rto_deadline_.reset();
    if (snd_una_ >= snd_nxt_) return false;
    ++stats_.timeouts;
    cc_.inflight = pipe();
    cc::on_loss(cc_, cc::LossKind::Timeout);
    // Everything outstanding is presumed lost.
    std::vector<std::uint64_t> lost;
    for (const auto& t : in_network_) lost.push_back(t.seq);
    for (const auto& t : suspects_) lost.push_back(t.seq);
    in_network_.clear();
    suspects_.clear();
    for (auto seq : retransmit_) lost.push_back(seq);
    retransmit_.clear();
    std::sort(lost.begin(), lost.end());
    lost.erase(std::unique(lost.begin(), lost.end()), lost.end());
    for (auto seq : lost) {
      if (!acked_[seq]) retransmit_.push_back(seq);
    }
    in_recovery_ = false;
    recover_ = snd_nxt_;
    rto_backoff_ = std::min<std::int64_t>(rto_backoff_ * 2, 64);
    pump(now, out);
    arm_rto(now);
    return true;
  }

  void tuner_tick(SimTime now) { cc::tuner_tick(cc_, now); }

  /// Transmissions still believed to be in the network.
  int pipe() const { return static_cast<int>(in_network_.size() + suspects_.size()); }

  Duration rto() const {
    Duration base = srtt_ ? std::max(2 * *srtt_, kMinRto) : kInitialRto;
    return std::min(base * rto_backoff_, kMaxRto);
  }

  int flow_id() const { return flow_id_; }
  bool active() const { return active_; }
  const cc::FlowState& cc() const { return cc_; }
  cc::FlowState& cc() { return cc_; }
  const SenderStats& stats() const { return stats_; }
  std::optional<SimTime> rto_deadline() const { return rto_deadline_; }
  std::uint64_t rto_generation() const { return rto_generation_; }
  std::uint64_t snd_una() const { return snd_una_; }
  std::uint64_t snd_nxt() const { return snd_nxt_; }
  bool in_recovery() const { return in_recovery_; }

 private:
  struct Transmission {
    std::uint64_t xmit;
    std::uint64_t seq;
    std::uint64_t suspect_since = 0;  ///< ack count when overtaken
  };

  bool mark_acked(std::uint64_t seq) {
    if (seq >= acked_.size() || acked_[seq]) return false;
    acked_[seq] = true;
    return true;
  }

  // Resolves transmissions overtaken by the one just acked and declares
  // losses once kDupThresh acks have passed them.
  void settle_transmissions(std::uint64_t acked_xmit, SimTime now) {
    while (!in_network_.empty() && in_network_.front().xmit <= acked_xmit) {
      Transmission t = in_network_.front();
      in_network_.pop_front();
      if (t.xmit == acked_xmit || acked_[t.seq] || latest_xmit_[t.seq] != t.xmit) continue;
      t.suspect_since = ack_count_;
      suspects_.push_back(t);
    }
    while (!suspects_.empty() && ack_count_ - suspects_.front().suspect_since + 1 >= kDupThresh) {
      const Transmission t = suspects_.front();
      suspects_.pop_front();
      if (acked_[t.seq] || latest_xmit_[t.seq] != t.xmit) continue;
      on_packet_lost(t.seq, now);
    }
  }

  void on_packet_lost(std::uint64_t seq, SimTime /*now*/) {
    retransmit_.push_back(seq);
    if (!in_recovery_ && seq >= recover_) {
      cc_.inflight = pipe() + 1;
      cc::on_loss(cc_, cc::LossKind::TripleDupAck);
      in_recovery_ = true;
      recover_ = snd_nxt_;
      ++stats_.fast_retransmits;
    }
  }

  void pump(SimTime now, std::vector<Packet>& out) {
    while (active_ && cc::cwnd_allows_send(cc_, pipe())) {
      while (!retransmit_.empty() && acked_[retransmit_.front()]) retransmit_.pop_front();
      if (!retransmit_.empty()) {
        const auto seq = retransmit_.front();
        retransmit_.pop_front();
        out.push_back(make_packet(seq, now, true));
      } else {
        acked_.push_back(false);
        latest_xmit_.push_back(0);
        out.push_back(make_packet(snd_nxt_++, now, false));
      }
      if (!rto_deadline_) arm_rto(now);
    }
  }

  Packet make_packet(std::uint64_t seq, SimTime now, bool retransmission) {
    ++stats_.transmissions;
    if (retransmission) ++stats_.retransmissions;
    const std::uint64_t xmit = next_xmit_++;
    latest_xmit_[seq] = xmit;
    in_network_.push_back(Transmission{xmit, seq});
    return Packet{flow_id_, seq, xmit, packet_bytes_, now, now, retransmission};
  }

  void update_rto_estimate(Duration rtt) {
    if (!srtt_) {
      srtt_ = rtt;
    } else {
      *srtt_ = (*srtt_ * 7 + rtt) / 8;
    }
  }

  void arm_rto(SimTime now) {
    rto_deadline_ = now + rto();
    ++rto_generation_;
  }

  void disarm_rto() {
    if (!rto_deadline_) return;
    rto_deadline_.reset();
    ++rto_generation_;
  }

  int flow_id_;
  std::int32_t packet_bytes_;
  cc::FlowState cc_;
  SenderStats stats_;
  bool active_ = false;

  std::uint64_t snd_una_ = 0;
  std::uint64_t snd_nxt_ = 0;
  std::uint64_t next_xmit_ = 0;
  std::uint64_t ack_count_ = 0;
  std::vector<bool> acked_;
  std::vector<std::uint64_t> latest_xmit_;
  std::deque<Transmission> in_network_;
  std::deque<Transmission> suspects_;
  std::deque<std::uint64_t> retransmit_;
  bool in_recovery_ = false;
  std::uint64_t recover_ = 0;

  std::optional<Duration> srtt_;
  std::int64_t rto_backoff_ = 1;
  std::optional<SimTime> rto_deadline_;
  std::uint64_t rto_generation_ = 0;
};

}  // namespace c2lab::sim
