#pragma once

#include <array>
#include <cstdint>

namespace hasgld {

// Counter-based pseudo-random generator (Philox4x32-10).
//
// A generator is fully determined by a 64-bit seed (key) and a 64-bit stream
// id, so independent streams can be split off one experiment seed without
// sharing mutable state. Draw sequences are reproducible bit-for-bit for a
// given (seed, stream).
class CounterRng {
public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64();

  // uniform on [0, 1) with 53-bit resolution
  double uniform();

  // standard normal via Box-Muller; the second value of each pair is cached
  double normal();

  // unbiased uniform integer in [0, n); n must be positive
  std::uint64_t uniform_below(std::uint64_t n);

  // UniformRandomBitGenerator interface
  std::uint64_t operator()() { return next_u64(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ull; }

  std::uint64_t seed_value() const { return seed_; }
  std::uint64_t stream_value() const { return stream_; }

  // one keyed block permutation, exposed for known-answer tests
  static std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                                 std::array<std::uint32_t, 2> key);

private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buf_{};
  int buf_pos_ = 2;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace hasgld
