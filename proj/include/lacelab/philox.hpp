#pragma once

#include <array>
#include <cstdint>

namespace lacelab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// A draw is a pure function of (key, counter), so reveal order never
/// changes the stream.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

  static Key key_from_seed(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  }

  /// Uniform double in [0,1) with 53 random bits.
  static double uniform(const Counter& ctr, const Key& key) {
    const Counter o = block(ctr, key);
    const std::uint64_t bits = (std::uint64_t{o[0]} << 21) ^ (o[1] >> 11);
    return static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) * 0x1.0p-53;
  }
};

/// Sequential stream over one (seed, stream) pair; each call advances the counter.
class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint32_t stream_hi, std::uint32_t stream_lo)
      : key_(Philox4x32::key_from_seed(seed)), hi_(stream_hi), lo_(stream_lo) {}

  double uniform() {
    const auto c = Philox4x32::Counter{static_cast<std::uint32_t>(n_), static_cast<std::uint32_t>(n_ >> 32), lo_, hi_};
    ++n_;
    return Philox4x32::uniform(c, key_);
  }

  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t hi_, lo_;
  std::uint64_t n_ = 0;
};

}  // namespace lacelab
