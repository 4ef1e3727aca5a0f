#pragma once

#include <cstdint>
#include <limits>

namespace flipbench {

// xoshiro256** (Blackman & Vigna), state expanded from a 64-bit seed with
// splitmix64. This is the only generator used for matrix content, pair
// sampling and simulator noise, so every trace is reproducible across
// machines and standard libraries.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  static constexpr const char* kAlgorithm = "xoshiro256**/splitmix64";

  explicit Xoshiro256(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  // Uniform on [0, 1): top 53 bits of one draw scaled by 2^-53.
  double uniform01() noexcept;

  // Uniform integer in [0, bound). Unbiased (Lemire's multiply-and-reject).
  std::uint64_t below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

}  // namespace flipbench
