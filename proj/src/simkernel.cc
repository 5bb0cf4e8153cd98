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

#include "cachemw/simkernel.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "cachemw/errors.h"
#include "cachemw/hashing.h"

namespace cachemw {

void Kernel::schedule(Micros at, Action action) {
  if (at < now_)
    throw InternalError("event scheduled in the past: " + std::to_string(at) +
                        " < " + std::to_string(now_));
  heap_.push_back({at, next_seq_++, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
}

void Kernel::dispatch_one() {
  std::pop_heap(heap_.begin(), heap_.end(), Later{});
  Event ev = std::move(heap_.back());
  heap_.pop_back();
  now_ = ev.time;
  ++dispatched_;
  trace_ = (trace_ ^ static_cast<std::uint64_t>(ev.time)) * 0x100000001b3ull;
  trace_ = (trace_ ^ ev.seq) * 0x100000001b3ull;
  ev.action();
}

std::size_t Kernel::run_until(Micros t_end) {
  std::size_t n = 0;
  while (!heap_.empty() && heap_.front().time <= t_end) {
    dispatch_one();
    ++n;
  }
  if (t_end > now_) now_ = t_end;
  return n;
}

std::size_t Kernel::run_all() {
  std::size_t n = 0;
  while (!heap_.empty()) {
    dispatch_one();
    ++n;
  }
  return n;
}

void InflightBudget::acquire(Action on_admitted) {
  if (occupied_ < capacity_) {
    ++occupied_;
    kernel_->after(0, std::move(on_admitted));
  } else {
    waiting_.push_back(std::move(on_admitted));
  }
}

void InflightBudget::release() {
  if (occupied_ == 0) throw InternalError("budget released below zero");
  if (!waiting_.empty()) {
    kernel_->after(0, std::move(waiting_.front()));
    waiting_.pop_front();
  } else {
    --occupied_;
  }
}

void ConnectionQueue::submit(Send send) {
  fifo_.push_back(std::move(send));
  drain();
}

void ConnectionQueue::complete() {
  if (in_flight_ == 0) throw InternalError("connection completed with nothing in flight");
  --in_flight_;
  drain();
}

void ConnectionQueue::drain() {
  while (in_flight_ < depth_ && !fifo_.empty()) {
    Send next = std::move(fifo_.front());
    fifo_.pop_front();
    ++in_flight_;
    if (!next()) --in_flight_;
  }
}

std::mt19937_64 derive_stream(std::uint64_t master_seed, std::string_view label) {
  std::uint64_t x = master_seed ^ hash_fnv1a_64(label);
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  x ^= x >> 31;
  return std::mt19937_64(x);
}

Micros ceil_micros(double us) {
  if (us <= 0) return 0;
  return static_cast<Micros>(std::ceil(us - 1e-9));
}

}  // namespace cachemw
