#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <utility>
#include <vector>

#include "rdgoodput/units.hpp"

namespace rdgoodput {

// Tie-break order for events scheduled at the same instant.
enum class EventPriority : std::uint8_t { FrameEnd = 0, TimerExpiry = 1, TxStart = 2 };

// Min-queue keyed by (time, priority, insertion sequence), so runs are fully
// deterministic even when several events share a timestamp.
template <typename Payload>
class EventQueue {
 public:
  struct Event {
    Duration time;
    EventPriority priority;
    std::uint64_t seq;
    Payload payload;
  };

  void push(Duration time, EventPriority priority, Payload payload) {
    heap_.push(Event{time, priority, next_seq_++, std::move(payload)});
  }

  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }

  const Event& top() const {
    if (heap_.empty()) throw std::logic_error("EventQueue::top on empty queue");
    return heap_.top();
  }

  Event pop() {
    if (heap_.empty()) throw std::logic_error("EventQueue::pop on empty queue");
    Event e = heap_.top();
    heap_.pop();
    return e;
  }

  void clear() { heap_ = {}; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      if (a.priority != b.priority) return a.priority > b.priority;
      return a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace rdgoodput
