// SPDX-License-Identifier: Apache-2.0
#include "mogen/rng.hpp"

#include <cmath>

namespace mogen {

namespace {
constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

uint64_t mix64(uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RngStream::RngStream(uint64_t seed, std::string_view name)
    : key_(mix64(seed ^ fnv1a64(name))), counter_(0) {}

RngStream RngStream::split(std::string_view child) const {
  return RngStream(mix64(key_ ^ fnv1a64(child)), 0);
}

uint64_t RngStream::next_u64() {
  uint64_t c = counter_++;
  return mix64(key_ ^ (c * kGolden + 1));
}

double RngStream::uniform() {
  // 53 bits of mantissa -> [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int64_t RngStream::uniform_int(int64_t lo, int64_t hi) {
  // Modulo bias is negligible for the ranges used here (hi - lo << 2^64).
  uint64_t span = static_cast<uint64_t>(hi - lo);
  return lo + static_cast<int64_t>(next_u64() % span);
}

double RngStream::normal() {
  // Box-Muller; u1 shifted into (0, 1] so log() is finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  return r * std::cos(2.0 * M_PI * u2);
}

double RngStream::normal(double mean, double stddev) { return mean + stddev * normal(); }

}  // namespace mogen
