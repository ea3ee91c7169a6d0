#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace cfx {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: maps
/// (counter, key) to four 32-bit words.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

/// Substream identifiers. Brownian and jump draws live on separate streams so
/// that common-random-number pairs stay aligned when jump counts differ.
enum class Stream : std::uint32_t { Brownian = 1, Jumps = 2, Payoff = 3 };

/// Counter-based generator for one (seed, stream, path) triple. Satisfies
/// UniformRandomBitGenerator.
class PathRng {
 public:
  using result_type = std::uint32_t;

  PathRng(std::uint64_t seed, Stream stream, std::uint64_t path)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(static_cast<std::uint32_t>(stream)),
        path_(path) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return 0xFFFFFFFFu; }

  result_type operator()() {
    if (pos_ == 4) refill();
    return block_[pos_++];
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    const std::uint64_t hi = (*this)() >> 5;
    const std::uint64_t lo = (*this)() >> 6;
    return (static_cast<double>((hi << 26) | lo) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; the sine branch is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  void refill() {
    block_ = philox4x32({static_cast<std::uint32_t>(block_index_), stream_,
                         static_cast<std::uint32_t>(path_), static_cast<std::uint32_t>(path_ >> 32)},
                        key_);
    ++block_index_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_;
  std::uint64_t path_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace cfx
