#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "rsgame/random.hpp"

using rsgame::philox4x32;
using rsgame::RandomStream;

TEST(Philox, KnownAnswers) {
  using W = std::array<std::uint32_t, 4>;
  EXPECT_EQ(philox4x32({0, 0, 0, 0}, {0, 0}), (W{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (W{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (W{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Stream, CounterLayout) {
  const std::uint64_t seed = 0x0123456789abcdefULL, index = 0xfedcba9876543210ULL;
  RandomStream s(seed, 1, index);
  for (std::uint32_t block = 0; block < 3; ++block) {
    const auto w = philox4x32({block, 1, 0x76543210u, 0xfedcba98u}, {0x89abcdefu, 0x01234567u});
    for (int k = 0; k < 4; ++k) EXPECT_EQ(s.next_word(), w[static_cast<std::size_t>(k)]);
    EXPECT_EQ(s.blocks_used(), block + 1);
  }
}

TEST(Stream, UniformBitLayout) {
  RandomStream s(7, 0, 42);
  const auto w = philox4x32({0, 0, 42, 0}, {7, 0});
  const auto expect = [](std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t k = (static_cast<std::uint64_t>(hi >> 5) << 26) | (lo >> 6);
    return (static_cast<double>(k) + 0.5) * 0x1p-53;
  };
  EXPECT_EQ(s.uniform(), expect(w[0], w[1]));
  EXPECT_EQ(s.uniform(), expect(w[2], w[3]));
  EXPECT_EQ(s.blocks_used(), 1u);
  s.uniform();
  EXPECT_EQ(s.blocks_used(), 2u);
}

TEST(Stream, OpenUnitIntervalAndMoments) {
  RandomStream s(1, 0, 0);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12, 2e-3);
}

TEST(Stream, DistinctStreamsDiffer) {
  std::set<std::uint32_t> first;
  for (std::uint32_t d = 0; d < 2; ++d)
    for (std::uint64_t i = 0; i < 50; ++i) first.insert(RandomStream(9, d, i).next_word());
  EXPECT_EQ(first.size(), 100u);
  EXPECT_NE(RandomStream(1, 0, 0).next_word(), RandomStream(2, 0, 0).next_word());
}
