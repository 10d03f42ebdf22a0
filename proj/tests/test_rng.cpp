#include <gtest/gtest.h>

#include <set>

#include "fret/rng.hpp"

using fret::Philox4x32;
using fret::RngStream;

// Known-answer vectors of the Random123 reference implementation (philox4x32, 10 rounds).
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::apply({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Philox4x32::apply({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                     {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Philox4x32::apply({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                     {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(RngStream, SameSeedSameSequence) {
  RngStream a(7, 3);
  RngStream b(7, 3);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(RngStream, SubstreamsDiffer) {
  const RngStream root(42);
  std::set<std::uint64_t> first;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    RngStream s = root.substream(i);
    first.insert(s());
  }
  EXPECT_EQ(first.size(), 1000u);
  EXPECT_NE(root.substream(0).stream_id(), root.stream_id());
}

TEST(RngStream, SubstreamIsPureFunctionOfParentIdentity) {
  RngStream a(1, 9);
  a();
  a();
  const RngStream b(1, 9);
  EXPECT_EQ(a.substream(5).stream_id(), b.substream(5).stream_id());
}

TEST(RngStream, UniformRangesAndMoments) {
  RngStream r(123);
  const int n = 200000;
  double sum = 0.0;
  double exp_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = r.uniform_pos();
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 1.0);
    sum += u;
    exp_sum += r.exponential();
  }
  // Means 1/2 and 1 with sd sqrt(1/12) and 1.
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(exp_sum / n, 1.0, 4.0 / std::sqrt(n));
}
