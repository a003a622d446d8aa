#pragma once

#include <array>
#include <cstdint>

namespace rsgame {

/// Philox4x32-10 block function.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Named counter-based stream. Block b of stream (seed, domain, index) is
/// philox4x32({b, domain, index_lo, index_hi}, {seed_lo, seed_hi}); each block
/// yields two doubles in (0, 1), see uniform().
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint32_t domain, std::uint64_t index);

  /// (k + 0.5)·2⁻⁵³ where k is the top 27 bits of one word followed by the
  /// top 26 bits of the next; never 0 or 1.
  double uniform();
  std::uint32_t next_word();
  std::uint32_t blocks_used() const { return block_; }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t domain_;
  std::uint32_t index_lo_;
  std::uint32_t index_hi_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

/// Stream domains in use.
inline constexpr std::uint32_t kRiskEstimateDomain = 0;
inline constexpr std::uint32_t kHittingDomain = 1;

}  // namespace rsgame
