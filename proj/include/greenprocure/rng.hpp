#pragma once

#include <array>
#include <cstdint>
#include <cmath>

namespace greenprocure {

// Counter-based Philox4x32-10. Streams are keyed by (seed, stream id) and
// indexed by a 64-bit counter, so draws are reproducible independent of
// evaluation order and threading.
namespace detail {

inline std::array<uint32_t, 4> philox_block(uint64_t key, uint64_t ctr_hi, uint64_t ctr_lo) {
  uint32_t k0 = static_cast<uint32_t>(key);
  uint32_t k1 = static_cast<uint32_t>(key >> 32);
  std::array<uint32_t, 4> x = {
      static_cast<uint32_t>(ctr_lo), static_cast<uint32_t>(ctr_lo >> 32),
      static_cast<uint32_t>(ctr_hi), static_cast<uint32_t>(ctr_hi >> 32)};
  for (int round = 0; round < 10; ++round) {
    const uint64_t pa = 0xD2511F53ull * x[0];
    const uint64_t pb = 0xCD9E8D57ull * x[2];
    const std::array<uint32_t, 4> y = {
        static_cast<uint32_t>(pb >> 32) ^ x[1] ^ k0,
        static_cast<uint32_t>(pb),
        static_cast<uint32_t>(pa >> 32) ^ x[3] ^ k1,
        static_cast<uint32_t>(pa)};
    x = y;
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  return x;
}

}  // namespace detail

inline uint64_t mix64(uint64_t x) {
  // splitmix64 finalizer; used to derive stream keys from (seed, tags)
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline uint64_t stream_key(uint64_t seed, uint64_t tag_a, uint64_t tag_b = 0, uint64_t tag_c = 0) {
  uint64_t k = mix64(seed);
  k = mix64(k ^ tag_a);
  k = mix64(k ^ tag_b);
  return mix64(k ^ tag_c);
}

class RngStream {
 public:
  explicit RngStream(uint64_t key) : key_(key) {}
  RngStream(uint64_t seed, uint64_t tag_a, uint64_t tag_b = 0, uint64_t tag_c = 0)
      : key_(stream_key(seed, tag_a, tag_b, tag_c)) {}

  // uniform in (0,1), never exactly 0 or 1
  double uniform() {
    const uint64_t bits = next_u64();
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  std::array<double, 3> normal3() { return {normal(), normal(), normal()}; }

 private:
  uint64_t next_u64() {
    if (word_index_ == 0) {
      block_ = detail::philox_block(key_, 0, counter_++);
      word_index_ = 2;
      return (static_cast<uint64_t>(block_[0]) << 32) | block_[1];
    }
    word_index_ = 0;
    return (static_cast<uint64_t>(block_[2]) << 32) | block_[3];
  }

  uint64_t key_ = 0;
  uint64_t counter_ = 0;
  std::array<uint32_t, 4> block_ = {0, 0, 0, 0};
  int word_index_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace greenprocure
