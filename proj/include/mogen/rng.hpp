// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mogen {

// Counter-based splittable RNG. Every stream is a pure function of
// (seed, stream name, counter), so independent consumers can draw without
// sharing state and any draw can be replayed from (seed, name, cursor).
// The generator is a SplitMix64-style bijective mixer over the counter.
class RngStream {
 public:
  RngStream(uint64_t seed, std::string_view name);

  // Derive an independent child stream; child draws never collide with the
  // parent's regardless of cursor positions.
  RngStream split(std::string_view child) const;

  uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi);
  // Uniform integer in [lo, hi) (hi exclusive, hi > lo).
  int64_t uniform_int(int64_t lo, int64_t hi);
  // Standard normal via Box-Muller; consumes two counter slots per call.
  double normal();
  double normal(double mean, double stddev);

  uint64_t cursor() const { return counter_; }
  void set_cursor(uint64_t c) { counter_ = c; }
  uint64_t key() const { return key_; }

 private:
  RngStream(uint64_t key, uint64_t counter) : key_(key), counter_(counter) {}
  uint64_t key_ = 0;
  uint64_t counter_ = 0;
};

// FNV-1a over bytes; used to derive stream keys from names.
uint64_t fnv1a64(std::string_view s);

}  // namespace mogen
