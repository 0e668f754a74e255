#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace pottsmix {

// Fixed-length packed bit array. Used for bond configurations (bit i is edge i)
// and for vertex / half-cell subsets.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t nbits) : nbits_(nbits), words_((nbits + 63) / 64, 0) {}

  static BitVector from_mask(std::size_t nbits, std::uint64_t mask);
  static BitVector all(std::size_t nbits);

  std::size_t size() const { return nbits_; }
  bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
  void set(std::size_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  void reset(std::size_t i) { words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63)); }
  void assign(std::size_t i, bool v) { v ? set(i) : reset(i); }
  void clear() { std::fill(words_.begin(), words_.end(), 0); }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  bool none() const {
    for (auto w : words_) if (w) return false;
    return true;
  }
  bool is_subset_of(const BitVector& other) const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & ~other.words_[k]) return false;
    return true;
  }
  BitVector complement() const;

  // Low 64 bits; only meaningful when size() <= 64.
  std::uint64_t low_word() const { return words_.empty() ? 0 : words_[0]; }

  // Most significant nibble first, ceil(size/4) digits.
  std::string to_hex() const;
  static BitVector from_hex(std::string_view hex, std::size_t nbits);

  const std::vector<std::uint64_t>& words() const { return words_; }
  bool operator==(const BitVector&) const = default;

 private:
  std::size_t nbits_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace pottsmix
