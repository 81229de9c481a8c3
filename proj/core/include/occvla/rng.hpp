// Copyright (c) 2026 The occvla Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace occvla {

// Counter-based splittable PRNG (splitmix64 core). Every stochastic
// operation in the project draws from an explicit stream; there is no
// global RNG state. Streams derived via split() are independent of draws
// made on the parent, so adding a consumer never shifts another
// consumer's values.
class RngStream {
 public:
  RngStream() : key_(0), counter_(0) {}
  explicit RngStream(uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ull)), counter_(0) {}

  // Child stream keyed by a label; deterministic in (parent key, label).
  RngStream split(std::string_view label) const {
    uint64_t h = key_;
    for (char c : label) h = mix(h ^ static_cast<uint64_t>(static_cast<unsigned char>(c)));
    return RngStream(h, 0, internal_tag{});
  }
  RngStream split(uint64_t label) const { return RngStream(mix(key_ ^ mix(label)), 0, internal_tag{}); }

  uint64_t next_u64() {
    uint64_t z = key_ + 0x9e3779b97f4a7c15ull * ++counter_;
    return mix(z);
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n), n > 0.
  uint64_t uniform_int(uint64_t n) { return next_u64() % n; }

  // Standard normal via Box-Muller (no cached spare, so draws stay
  // stateless in the counter).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  uint64_t state_key() const { return key_; }
  uint64_t state_counter() const { return counter_; }
  void restore(uint64_t key, uint64_t counter) {
    key_ = key;
    counter_ = counter;
  }

 private:
  struct internal_tag {};
  RngStream(uint64_t key, uint64_t counter, internal_tag) : key_(key), counter_(counter) {}

  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t key_;
  uint64_t counter_;
};

}  // namespace occvla
