#pragma once

// Counter-based random streams. Every stream is addressed by a 64-bit key
// derived from a tuple of integers, so any (seed, run, retry) or
// (seed, epoch, purpose) draw can be reproduced without replaying others.

#include <cstdint>
#include <initializer_list>

namespace odesurro {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x6A09E667F3BCC909ull;
  for (std::uint64_t w : words) h = mix64(h ^ mix64(w));
  return h;
}

class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

  constexpr std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

  // [0, 1) with 53 random bits.
  constexpr double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  constexpr double uniform(double hi) { return uniform01() * hi; }
  constexpr double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  // [0, n) by 128-bit multiply; bias is at most n / 2^64.
  std::uint64_t index(std::uint64_t n) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(next_u64()) * n;
    return static_cast<std::uint64_t>(prod >> 64);
  }

  constexpr std::uint64_t key() const { return key_; }
  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace odesurro
