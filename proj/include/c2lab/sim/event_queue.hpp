#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "c2lab/units.hpp"

namespace c2lab::sim {

/// Min-heap of timed events. Events with equal timestamps pop in insertion
/// order, which keeps runs deterministic.
template <typename Event>
class EventQueue {
 public:
  struct Entry {
    SimTime at;
    std::uint64_t seq;
    Event event;
  };

  void push(SimTime at, Event event) {
    heap_.push_back(Entry{at, next_seq_++, std::move(event)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

  SimTime next_time() const {
    if (heap_.empty()) throw std::logic_error("EventQueue::next_time on empty queue");
    return heap_.front().at;
  }

  Entry pop() {
    if (heap_.empty()) throw std::logic_error("EventQueue::pop on empty queue");
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Entry e = std::move(heap_.back());
    heap_.pop_back();
    return e;
  }

  /// Visits pending events in unspecified order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& e : heap_) fn(e.at, e.event);
  }

 private:
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  std::vector<Entry> heap_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace c2lab::sim
