#pragma once
// Counter-based random number generation (Philox4x32-10) plus the handful of
// samplers the simulators need. Streams are addressed by (seed, stream id):
// every (seed, stream, draw index) triple maps to a fixed output, so replicate
// results do not depend on execution order or thread count.

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>

namespace nglab {

// Philox4x32-10 block function (Salmon, Moraes, Dror, Shaw 2011): maps a
// 128-bit counter and 64-bit key through 10 rounds to 128 output bits.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    round_(ctr, key);
    for (int r = 1; r < 10; ++r) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
      round_(ctr, key);
    }
    return ctr;
  }

 private:
  static void round_(std::array<std::uint32_t, 4>& c,
                     const std::array<std::uint32_t, 2>& k) {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

// One logical random stream. Key carries the master seed, counter lanes 2..3
// carry the stream id and lanes 0..1 the block index, so distinct stream ids
// under one seed never overlap.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() { return next_u64(); }

  std::uint64_t next_u64() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const auto out = Philox4x32::block(
        {static_cast<std::uint32_t>(block_),
         static_cast<std::uint32_t>(block_ >> 32), stream_lo_, stream_hi_},
        key_);
    ++block_;
    spare_ = (std::uint64_t{out[2]} << 32) | out[3];
    have_spare_ = true;
    return (std::uint64_t{out[0]} << 32) | out[1];
  }

  // Uniform on [0,1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Exponential with the given rate; may return exactly 0 (probability 2^-53
  // per draw), callers that need strict positivity must resample.
  double exponential(double rate) {
    assert(rate > 0.0);
    return -std::log(uniform_pos()) / rate;
  }

  // Unbiased uniform integer in [0, n) (Lemire's multiply-with-rejection).
  std::uint64_t uniform_below(std::uint64_t n) {
    assert(n > 0);
    std::uint64_t x = next_u64();
    unsigned __int128 m = static_cast<unsigned __int128>(x) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<unsigned __int128>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Exact Poisson sampling. Splits large means into chunks (Poisson additivity)
  // so the product-of-uniforms method never underflows.
  std::int64_t poisson(double mean) {
    assert(mean >= 0.0);
    std::int64_t total = 0;
    while (mean > kPoissonChunk) {
      total += poisson_small_(kPoissonChunk);
      mean -= kPoissonChunk;
    }
    if (mean > 0.0) total += poisson_small_(mean);
    return total;
  }

 private:
  static constexpr double kPoissonChunk = 32.0;

  std::int64_t poisson_small_(double mean) {
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t block_ = 0;
  std::uint64_t spare_ = 0;
  bool have_spare_ = false;
};

// Stream-id allocation. Replicate r of an experiment uses stream r; auxiliary
// per-edge streams (graphical construction) live in a tagged range so they can
// never collide with replicate streams.
inline constexpr std::uint64_t kEdgeStreamTag = std::uint64_t{1} << 63;

inline std::uint64_t edge_stream(std::uint64_t replicate, std::uint32_t edge) {
  assert(replicate < (std::uint64_t{1} << 50));
  assert(edge < (1u << 13));
  return kEdgeStreamTag | (replicate << 13) | edge;
}

}  // namespace nglab
