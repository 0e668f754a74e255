#include "pottsmix/bitvector.hpp"

#include "pottsmix/errors.hpp"

namespace pottsmix {

BitVector BitVector::from_mask(std::size_t nbits, std::uint64_t mask) {
  BitVector b(nbits);
  if (!b.words_.empty()) b.words_[0] = nbits >= 64 ? mask : mask & ((std::uint64_t{1} << nbits) - 1);
  return b;
}

BitVector BitVector::all(std::size_t nbits) { return BitVector(nbits).complement(); }

BitVector BitVector::complement() const {
  BitVector r(nbits_);
  for (std::size_t k = 0; k < words_.size(); ++k) r.words_[k] = ~words_[k];
  if (nbits_ % 64 != 0) r.words_.back() &= (std::uint64_t{1} << (nbits_ % 64)) - 1;
  return r;
}

std::string BitVector::to_hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::size_t n = (nbits_ + 3) / 4;
  if (n == 0) return "0";
  std::string out(n, '0');
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t bit = 4 * k;
    unsigned nib = 0;
    for (int b = 0; b < 4 && bit + b < nbits_; ++b) nib |= static_cast<unsigned>(test(bit + b)) << b;
    out[n - 1 - k] = digits[nib];
  }
  return out;
}

BitVector BitVector::from_hex(std::string_view hex, std::size_t nbits) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  BitVector b(nbits);
  std::size_t n = hex.size();
  for (std::size_t k = 0; k < n; ++k) {
    char c = hex[n - 1 - k];
    unsigned nib;
    if (c >= '0' && c <= '9') nib = c - '0';
    else if (c >= 'a' && c <= 'f') nib = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') nib = c - 'A' + 10;
    else throw InvalidArgument("bad hex digit in '" + std::string(hex) + "'");
    for (int bit = 0; bit < 4; ++bit) {
      if (!((nib >> bit) & 1u)) continue;
      std::size_t i = 4 * k + bit;
      if (i >= nbits) throw InvalidArgument("hex string has bits beyond length " + std::to_string(nbits));
      b.set(i);
    }
  }
  return b;
}

}  // namespace pottsmix
