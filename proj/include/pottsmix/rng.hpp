#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace pottsmix {

// Philox4x32-10 counter-based generator. The key is the run seed, the upper
// half of the counter is the stream id, the lower half counts blocks, so
// every (seed, stream) pair is an independent reproducible sequence.
class Philox {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;

  Philox() : Philox(0, 0) {}
  Philox(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xffffffffu; }

  static Block block(const Block& counter, std::array<std::uint32_t, 2> key);

  result_type operator()() {
    if (index_ == 4) refill();
    return buffer_[index_++];
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() {
    std::uint64_t hi = (*this)() >> 5;
    std::uint64_t lo = (*this)() >> 6;
    return static_cast<double>((hi << 26) | lo) * 0x1.0p-53;
  }

  // Uniform on {0, ..., n-1}, unbiased (Lemire).
  std::uint32_t below(std::uint32_t n) {
    std::uint64_t m = std::uint64_t{(*this)()} * n;
    auto low = static_cast<std::uint32_t>(m);
    if (low < n) {
      std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;
      while (low < threshold) {
        m = std::uint64_t{(*this)()} * n;
        low = static_cast<std::uint32_t>(m);
      }
    }
    return static_cast<std::uint32_t>(m >> 32);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t blocks_used() const { return block_counter_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_counter_ = 0;
  Block buffer_{};
  int index_ = 4;
};

// Stable 64-bit stream id for a human-readable stream name (FNV-1a).
std::uint64_t stream_id(std::string_view name);

// Threshold t with P(u32 < t) = prob rounded to 2^-32; prob >= 1 maps to 2^32.
inline std::uint64_t bernoulli_threshold(double prob) {
  if (prob <= 0) return 0;
  if (prob >= 1) return std::uint64_t{1} << 32;
  return static_cast<std::uint64_t>(prob * 4294967296.0);
}

}  // namespace pottsmix
