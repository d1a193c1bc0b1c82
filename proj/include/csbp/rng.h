#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace csbp {

// Philox4x32-10 counter-based generator.
//
// A stream is identified by a 64-bit key and a 64-bit stream id; the
// remaining 64 counter bits index blocks of four 32-bit outputs. Two
// outputs are fused into each 64-bit result, so every draw consumes half a
// block. Streams with different (key, stream id) are statistically
// independent and can be created in any order.
class Philox {
 public:
  using result_type = std::uint64_t;

  Philox(std::uint64_t key, std::uint64_t stream_id) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)},
        stream_id_{stream_id} {}

  static constexpr auto min() noexcept -> result_type { return 0; }
  static constexpr auto max() noexcept -> result_type {
    return std::numeric_limits<result_type>::max();
  }

  auto operator()() noexcept -> result_type {
    if (pos_ == 0) {
      refill();
    }
    auto lo = static_cast<result_type>(buf_[pos_]);
    auto hi = static_cast<result_type>(buf_[pos_ + 1]);
    pos_ = (pos_ + 2) & 3u;
    return lo | (hi << 32);
  }

  // Uniform on the open interval (0, 1), 53-bit resolution.
  auto uniform() noexcept -> double {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  auto blocks_consumed() const noexcept -> std::uint64_t { return block_; }

 private:
  void refill() noexcept {
    std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32),
                                      static_cast<std::uint32_t>(stream_id_),
                                      static_cast<std::uint32_t>(stream_id_ >> 32)};
    auto k = key_;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
      }
      auto p0 = static_cast<std::uint64_t>(0xD2511F53u) * ctr[0];
      auto p1 = static_cast<std::uint64_t>(0xCD9E8D57u) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    buf_ = ctr;
    ++block_;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  unsigned pos_ = 0;
};

// SplitMix64 finaliser; used to derive stream keys.
constexpr auto mix64(std::uint64_t x) noexcept -> std::uint64_t {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// What a stream is used for inside one Monte Carlo replica. Giving every
// consumer its own role keeps a replica's draws stable when an unrelated
// consumer changes how many numbers it takes.
enum class Stream_role : std::uint32_t {
  generic = 0,
  horizon = 1,     // extinction-time / maximum draws
  spine = 2,       // Poisson atoms along the spine
  clock = 3,       // skeleton mutation time T2
  grafts = 4,      // grafted excursions
  forward = 5,     // forward path simulation
  entrance = 6,
  tail = 7,        // tail stratum of Laplace estimates
  split = 8,       // spine-pair fractions
};

// Streams keyed by (master seed, replica id, role).
class Replica_streams {
 public:
  Replica_streams(std::uint64_t master_seed, std::uint64_t replica) noexcept
      : seed_{master_seed}, replica_{replica} {}

  auto stream(Stream_role role) const noexcept -> Philox {
    auto key = mix64(seed_ ^ mix64(0xC5B5'0000'0000'0000ull + static_cast<std::uint64_t>(role)));
    return Philox{key, replica_};
  }

  auto seed() const noexcept -> std::uint64_t { return seed_; }
  auto replica() const noexcept -> std::uint64_t { return replica_; }

 private:
  std::uint64_t seed_;
  std::uint64_t replica_;
};

}  // namespace csbp
