#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "c2lab/units.hpp"

namespace c2lab::sim {

struct Packet {
  int flow_id = 0;
  std::uint64_t seq = 0;
  /// Per-flow transmission counter; retransmissions get a fresh id.
  std::uint64_t xmit = 0;
  std::int32_t size_bytes = 0;
  SimTime sent_at{};
  SimTime enqueued_at{};
  bool retransmission = false;
};

enum class EnqueueResult { Accepted, Dropped };
enum class CodelVerdict { Forward, Drop };

struct CodelParams {
  Duration target = std::chrono::milliseconds{5};
  Duration interval = std::chrono::milliseconds{100};
  /// Never drop when at most this many bytes remain queued.
  std::int64_t max_packet_bytes = 1500;
};

/// CoDel controller state (sojourn-time AQM with the 1/sqrt(count) drop
/// schedule). Decisions are made per head-of-line packet at dequeue.
class Codel {
 public:
  explicit Codel(CodelParams params = {}) : params_(params) {}

  /// Verdict for a packet just taken from the head of the queue.
  /// `backlog_bytes` is what remains queued behind it.
  CodelVerdict decide(const Packet& pkt, SimTime now, std::int64_t backlog_bytes) {
    const bool ok_to_drop = update_ok_to_drop(now - pkt.enqueued_at, now, backlog_bytes);
    if (dropping_) {
      if (!ok_to_drop) {
        dropping_ = false;
        return CodelVerdict::Forward;
      }
      if (now >= drop_next_) {
        ++count_;
        drop_next_ = control_law(drop_next_, count_);
        return CodelVerdict::Drop;
      }
      return CodelVerdict::Forward;
    }
    if (ok_to_drop) {
      dropping_ = true;
      const auto delta = count_ - last_count_;
      count_ = (delta > 1 && now - drop_next_ < 16 * params_.interval) ? delta : 1;
      drop_next_ = control_law(now, count_);
      last_count_ = count_;
      return CodelVerdict::Drop;
    }
    return CodelVerdict::Forward;
  }

  /// Called when the queue runs empty.
  void on_empty() {
    first_above_time_.reset();
    dropping_ = false;
  }

  bool dropping() const { return dropping_; }
  std::uint32_t count() const { return count_; }
  SimTime drop_next() const { return drop_next_; }
  const CodelParams& params() const { return params_; }

 private:
  bool update_ok_to_drop(Duration sojourn, SimTime now, std::int64_t backlog_bytes) {
    if (sojourn < params_.target || backlog_bytes <= params_.max_packet_bytes) {
      first_above_time_.reset();
      return false;
    }
    if (!first_above_time_) {
      first_above_time_ = now + params_.interval;
      return false;
    }
    return now >= *first_above_time_;
  }

  SimTime control_law(SimTime t, std::uint32_t count) const {
    const auto step = std::chrono::duration_cast<Duration>(
        FineDuration(params_.interval) / std::sqrt(static_cast<double>(count)));
    return t + step;
  }

  CodelParams params_;
  std::optional<SimTime> first_above_time_;
  SimTime drop_next_{};
  std::uint32_t count_ = 0;
  std::uint32_t last_count_ = 0;
  bool dropping_ = false;
};

/// Byte-limited FIFO in front of the bottleneck link, drop-tail on admission,
/// optionally CoDel-managed on departure.
class BottleneckQueue {
 public:
  explicit BottleneckQueue(std::int64_t buffer_bytes, std::optional<CodelParams> codel = std::nullopt)
      : buffer_bytes_(buffer_bytes) {
    if (codel) codel_.emplace(*codel);
  }

  EnqueueResult enqueue(Packet pkt, SimTime now) {
    if (occupied_bytes_ + pkt.size_bytes > buffer_bytes_) return EnqueueResult::Dropped;
    pkt.enqueued_at = now;
    occupied_bytes_ += pkt.size_bytes;
    packets_.push_back(pkt);
    return EnqueueResult::Accepted;
  }

  /// Head packet to send on an opportunity at `now`; AQM drops made on the
  /// way are appended to `dropped`.
  std::optional<Packet> dequeue(SimTime now, std::vector<Packet>& dropped) {
    while (!packets_.empty()) {
      Packet pkt = packets_.front();
      packets_.pop_front();
      occupied_bytes_ -= pkt.size_bytes;
      if (!codel_) return pkt;
      if (codel_->decide(pkt, now, occupied_bytes_) == CodelVerdict::Forward) return pkt;
      dropped.push_back(pkt);
    }
    if (codel_) codel_->on_empty();
    return std::nullopt;
  }

  std::int64_t occupied_bytes() const { return occupied_bytes_; }
  std::int64_t buffer_bytes() const { return buffer_bytes_; }
  std::size_t size() const { return packets_.size(); }
  bool empty() const { return packets_.empty(); }
  const std::deque<Packet>& contents() const { return packets_; }
  const Codel* codel() const { return codel_ ? &*codel_ : nullptr; }

 private:
  std::int64_t buffer_bytes_;
  std::int64_t occupied_bytes_ = 0;
  std::deque<Packet> packets_;
  std::optional<Codel> codel_;
};

}  // namespace c2lab::sim
