#include <gtest/gtest.h>

#include <cmath>

#include "pgat/errors.hpp"
#include "pgat/rng.hpp"
#include "pgat/tensor.hpp"

namespace pgat {
namespace {

TEST(Tensor, ShapeAndSize) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.numel(), 24u);
  EXPECT_EQ(t.rank(), 3u);
  EXPECT_EQ(t.sample_size(), 12u);
  EXPECT_EQ(shape_string(t.shape()), "[2,3,4]");
}

TEST(Tensor, RejectsDataLengthMismatch) {
  EXPECT_THROW(Tensor({2, 2}, std::vector<Real>{1, 2, 3}), DimensionError);
}

TEST(Tensor, RejectsZeroExtent) { EXPECT_THROW(Tensor({2, 0}), DimensionError); }

TEST(Tensor, Arithmetic) {
  Tensor a({2}, {1, 2});
  Tensor b({2}, {3, 5});
  EXPECT_EQ(a + b, Tensor({2}, {4, 7}));
  EXPECT_EQ(b - a, Tensor({2}, {2, 3}));
  EXPECT_EQ(a * 2, Tensor({2}, {2, 4}));
  EXPECT_THROW(a += Tensor({3}), DimensionError);
}

TEST(Tensor, ShapeMismatchMessageNamesBothShapes) {
  try {
    require_same_shape(Tensor({2, 3}), Tensor({3, 2}), "test");
    FAIL();
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2,3]"), std::string::npos);
    EXPECT_NE(msg.find("[3,2]"), std::string::npos);
  }
}

TEST(Tensor, SliceAndReshape) {
  Tensor t({3, 2}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(t.slice_rows(1, 3), Tensor({2, 2}, {3, 4, 5, 6}));
  EXPECT_EQ(t.reshaped({6}).shape(), Shape({6}));
  EXPECT_THROW(t.reshaped({4}), DimensionError);
}

TEST(Tensor, Norms) {
  Tensor t({3}, {3, -4, 0});
  EXPECT_EQ(max_abs(t), 4);
  EXPECT_EQ(l2_norm(t.data()), 5);
  EXPECT_TRUE(t.all_finite());
  t[0] = std::nan("");
  EXPECT_FALSE(t.all_finite());
}

TEST(Rng, DeriveIsDeterministicAndTagSensitive) {
  Rng a = Rng::derive(7, {stream::kAttack, 1, 2});
  Rng b = Rng::derive(7, {stream::kAttack, 1, 2});
  Rng c = Rng::derive(7, {stream::kAttack, 2, 1});
  const auto va = a.next_u64();
  EXPECT_EQ(va, b.next_u64());
  EXPECT_NE(va, c.next_u64());
}

TEST(Rng, UniformInRangeAndBelowUnbiased) {
  Rng r(1);
  std::vector<int> counts(5);
  for (int i = 0; i < 50000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[r.below(5)];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Rng, NormalMoments) {
  Rng r(3);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

}  // namespace
}  // namespace pgat
