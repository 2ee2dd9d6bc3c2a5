#pragma once

#include <array>
#include <cstdint>

namespace fedexprox {

// Philox4x32-10 counter-based generator.
//
// Constants are the published ones: round multipliers 0xD2511F53 and
// 0xCD9E8D57, Weyl key increments 0x9E3779B9 and 0xBB67AE85, ten rounds.
// A stream is identified by (seed, stream): the 64-bit seed forms the key,
// the 64-bit stream id occupies the upper counter words, and the block
// index occupies the lower counter words.  Identical (seed, stream, index)
// yields identical output in any implementation of this scheme, which is
// what makes generated problems reproducible across languages.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint64_t stream)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        ctr2_(static_cast<std::uint32_t>(stream)),
        ctr3_(static_cast<std::uint32_t>(stream >> 32)) {}

  // Raw 4x32 block for the given counter/key, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
      const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
      const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
      const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

  // Next double in [0, 1): two 32-bit lanes form a 53-bit mantissa.
  double u01() {
    if (lane_ >= 4) {
      buffer_ = block({static_cast<std::uint32_t>(index_),
                       static_cast<std::uint32_t>(index_ >> 32), ctr2_, ctr3_},
                      {key0_, key1_});
      ++index_;
      lane_ = 0;
    }
    const std::uint64_t hi = buffer_[lane_];
    const std::uint64_t lo = buffer_[lane_ + 1];
    lane_ += 2;
    const std::uint64_t bits = ((hi << 32) | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
  }

  // Uniform integer in [0, range): floor of u01 * range.  The O(2^-53)
  // bias is negligible at the tested scales and the mapping is portable.
  std::uint64_t below(std::uint64_t range) {
    return static_cast<std::uint64_t>(u01() * static_cast<double>(range));
  }

 private:
  std::uint32_t key0_, key1_;
  std::uint32_t ctr2_, ctr3_;
  std::uint64_t index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int lane_ = 4;
};

}  // namespace fedexprox
