// Copyright 2026 The cachemw Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Deterministic discrete-event engine. Virtual time is integer microseconds;
// events at equal times run in scheduling order.

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "cachemw/cachenode.h"

namespace cachemw {

using Action = std::function<void()>;

class Kernel {
 public:
  Micros now() const { return now_; }

  /// Throws InternalError when `at` is in the past.
  void schedule(Micros at, Action action);
  void after(Micros delay, Action action) { schedule(now_ + delay, std::move(action)); }

  /// Dispatches every event with time <= t_end, then sets the clock to t_end.
  std::size_t run_until(Micros t_end);

  /// Runs until the queue is empty.
  std::size_t run_all();

  bool idle() const { return heap_.empty(); }
  std::size_t pending() const { return heap_.size(); }
  std::uint64_t dispatched() const { return dispatched_; }

  // Rolling hash over (time, sequence) of every dispatched event.
  std::uint64_t trace_digest() const { return trace_; }

 private:
  struct Event {
    Micros time;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  void dispatch_one();

  Micros now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
  std::uint64_t trace_ = 0xcbf29ce484222325ull;
  std::vector<Event> heap_;
};

// Bounded count of outstanding requests per middleware instance. Requests
// that find it full wait in a FIFO admission queue; a freed slot passes
// directly to the head of that queue.
class InflightBudget {
 public:
  static constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();

  InflightBudget(Kernel& kernel, std::size_t capacity)
      : kernel_(&kernel), capacity_(capacity) {}

  /// Runs `on_admitted` once a slot is held (in a fresh event).
  void acquire(Action on_admitted);
  void release();

  std::size_t capacity() const { return capacity_; }
  std::size_t occupied() const { return occupied_; }
  std::size_t waiting() const { return waiting_.size(); }

 private:
  Kernel* kernel_;
  std::size_t capacity_;
  std::size_t occupied_ = 0;
  std::deque<Action> waiting_;
};

// One middleware-to-server connection. At most `pipeline_depth` requests are
// on the wire; the rest wait in FIFO order.
class ConnectionQueue {
 public:
  explicit ConnectionQueue(std::size_t pipeline_depth = 1) : depth_(pipeline_depth) {}

  // Returns false when the request was abandoned while queued; the slot is
  // then offered to the next waiter.
  using Send = std::function<bool()>;

  /// `send` runs synchronously when a pipeline slot is free, else later
  /// from complete().
  void submit(Send send);
  void complete();

  std::size_t in_flight() const { return in_flight_; }
  std::size_t queued() const { return fifo_.size(); }
  std::size_t pipeline_depth() const { return depth_; }

 private:
  std::size_t depth_;
  std::size_t in_flight_ = 0;
  std::deque<Send> fifo_;

  void drain();
};

// Exactly-once completion of a call raced against its timeout. Late
// arrivals are dropped.
class CallGuard {
 public:
  bool claim() {
    if (done_) return false;
    done_ = true;
    return true;
  }
  bool done() const { return done_; }

 private:
  bool done_ = false;
};

/// Independent RNG stream for a component, derived from the master seed and
/// a fixed label so adding components does not perturb existing streams.
std::mt19937_64 derive_stream(std::uint64_t master_seed, std::string_view label);

/// Rounds a non-negative duration in microseconds up to an integer.
Micros ceil_micros(double us);

}  // namespace cachemw
