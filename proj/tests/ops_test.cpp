#include <gtest/gtest.h>

#include <cmath>

#include "pgat/errors.hpp"
#include "pgat/gradcheck.hpp"
#include "pgat/graph.hpp"
#include "pgat/ops.hpp"
#include "test_util.hpp"

namespace pgat {
namespace {

using testing::random_tensor;

Tensor one_hot(std::size_t k, const std::vector<int>& labels) {
  Tensor t({labels.size(), k});
  for (std::size_t n = 0; n < labels.size(); ++n) t[n * k + static_cast<std::size_t>(labels[n])] = 1;
  return t;
}

Tensor naive_matmul_bias(const Tensor& x, const Tensor& w, const Tensor& b) {
  const std::size_t B = x.dim(0), I = x.dim(1), O = w.dim(1);
  Tensor out({B, O});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t o = 0; o < O; ++o) {
      Real s = 0;
      for (std::size_t i = 0; i < I; ++i) s += x[n * I + i] * w[i * O + o];
      out[n * O + o] = s + b[o];
    }
  return out;
}

Tensor naive_conv(const Tensor& x, const Tensor& k, const Tensor& b, std::size_t stride, std::size_t pad) {
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t F = k.dim(0), Kh = k.dim(2), Kw = k.dim(3);
  const std::size_t Ho = (H + 2 * pad - Kh) / stride + 1, Wo = (W + 2 * pad - Kw) / stride + 1;
  Tensor out({B, F, Ho, Wo});
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t f = 0; f < F; ++f)
      for (std::size_t oh = 0; oh < Ho; ++oh)
        for (std::size_t ow = 0; ow < Wo; ++ow) {
          Real s = b[f];
          for (std::size_t c = 0; c < C; ++c)
            for (std::size_t i = 0; i < Kh; ++i)
              for (std::size_t j = 0; j < Kw; ++j) {
                const long ih = static_cast<long>(oh * stride + i) - static_cast<long>(pad);
                const long iw = static_cast<long>(ow * stride + j) - static_cast<long>(pad);
                if (ih < 0 || iw < 0 || ih >= static_cast<long>(H) || iw >= static_cast<long>(W)) continue;
                s += x[((n * C + c) * H + ih) * W + iw] * k[((f * C + c) * Kh + i) * Kw + j];
              }
          out[((n * F + f) * Ho + oh) * Wo + ow] = s;
        }
  return out;
}

Tensor linear_value(const Tensor& x, const Tensor& w, const Tensor& b) {
  Graph g;
  return ops::linear(g.input(x), g.input(w), g.input(b)).value();
}

TEST(Linear, IdentityWeights) {
  EXPECT_EQ(linear_value(Tensor({1, 2}, {1, 2}), Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2}, {0, 0})),
            Tensor({1, 2}, {1, 2}));
}

TEST(Linear, HandArithmetic) {
  EXPECT_EQ(linear_value(Tensor({1, 2}, {1, 1}), Tensor({2, 1}, {2, 3}), Tensor({1}, {1})), Tensor({1, 1}, {6}));
}

TEST(Linear, MatchesNaiveMatmul) {
  PGAT_REQUIRE_DOUBLE();
  Rng rng(11);
  const Tensor x = random_tensor({3, 4}, rng), w = random_tensor({4, 2}, rng), b = random_tensor({2}, rng);
  EXPECT_LE(max_abs_diff(linear_value(x, w, b), naive_matmul_bias(x, w, b)), 1e-14);
}

TEST(Linear, ShapeMismatchIsDimensionError) {
  EXPECT_THROW(linear_value(Tensor({1, 3}), Tensor({2, 2}), Tensor({2})), DimensionError);
  EXPECT_THROW(linear_value(Tensor({1, 2}), Tensor({2, 2}), Tensor({3})), DimensionError);
}

Tensor conv_value(const Tensor& x, const Tensor& k, const Tensor& b, ops::Conv2dOptions o) {
  Graph g;
  return ops::conv2d(g.input(x), g.input(k), g.input(b), o).value();
}

TEST(Conv2d, AllOnes) {
  EXPECT_EQ(conv_value(Tensor({1, 1, 3, 3}, Real(1)), Tensor({1, 1, 3, 3}, Real(1)), Tensor({1}), {1, 0}),
            Tensor({1, 1, 1, 1}, {9}));
}

TEST(Conv2d, DeltaKernelIsIdentity) {
  Rng rng(2);
  const Tensor x = random_tensor({1, 1, 5, 5}, rng);
  Tensor k({1, 1, 3, 3});
  k[4] = 1;
  EXPECT_EQ(conv_value(x, k, Tensor({1}), {1, 1}), x);
}

TEST(Conv2d, MatchesSixLoopOracle) {
  PGAT_REQUIRE_DOUBLE();
  Rng rng(3);
  const Tensor x = random_tensor({2, 3, 8, 8}, rng);
  const Tensor k = random_tensor({4, 3, 3, 3}, rng);
  const Tensor b = random_tensor({4}, rng);
  for (auto [s, p] : {std::pair<std::size_t, std::size_t>{1, 0}, {1, 1}, {2, 1}, {1, 2}}) {
    if ((8 + 2 * p - 3) % s) continue;
    EXPECT_LE(max_abs_diff(conv_value(x, k, b, {s, p}), naive_conv(x, k, b, s, p)), 1e-10) << s << "," << p;
  }
  const Tensor k4 = random_tensor({2, 3, 4, 4}, rng);
  const Tensor b2 = random_tensor({2}, rng);
  EXPECT_LE(max_abs_diff(conv_value(x, k4, b2, {2, 1}), naive_conv(x, k4, b2, 2, 1)), 1e-10);
}

TEST(Conv2d, NonIntegralOutputIsConfigError) {
  EXPECT_THROW(conv_value(Tensor({1, 1, 4, 4}), Tensor({1, 1, 3, 3}), Tensor({1}), {2, 0}), ConfigError);
  EXPECT_THROW(ops::conv_output_size(4, 3, 2, 0), ConfigError);
  EXPECT_EQ(ops::conv_output_size(28, 4, 2, 1), 14u);
}

TEST(Conv2d, ChannelMismatchIsDimensionError) {
  EXPECT_THROW(conv_value(Tensor({1, 2, 4, 4}), Tensor({1, 1, 3, 3}), Tensor({1}), {1, 0}), DimensionError);
}

Real ce_value(const Tensor& logits, const Tensor& y) {
  Graph g;
  return ops::softmax_cross_entropy(g.input(logits), y).value().item();
}

TEST(CrossEntropy, UniformIsLn2) {
  PGAT_REQUIRE_DOUBLE();
  EXPECT_NEAR(ce_value(Tensor({1, 2}, {0, 0}), one_hot(2, {0})), std::log(2.0), 1e-15);
}

TEST(CrossEntropy, SaturatedDoesNotOverflow) {
  const Real l = ce_value(Tensor({1, 2}, {1000, 0}), one_hot(2, {0}));
  EXPECT_TRUE(std::isfinite(l));
  EXPECT_NEAR(l, 0.0, 1e-12);
  EXPECT_NEAR(ce_value(Tensor({1, 2}, {1000, 0}), one_hot(2, {1})), 1000.0, 1e-9);
}

// References computed with 50-digit arithmetic.
TEST(CrossEntropy, MatchesHighPrecisionReference) {
  PGAT_REQUIRE_DOUBLE();
  struct Case {
    std::size_t k;
    std::vector<Real> logits;
    std::vector<int> labels;
    double expected;
  };
  const std::vector<Case> cases = {
      {4,
       {-1.334082, -7.837293, 5.203304, -3.221762, -2.105413, -4.901418, 1.056131, -5.412995, -6.01173, -1.07302,
        0.993256, -5.210503},
       {1, 2, 0},
       6.738183603297702506124428},
      {10,
       {0.496684, 3.766248, 1.360836, -5.334834, -4.708573, -6.754528, 5.393125, -2.847379, -0.658583, -7.570079,
        0.171356, 3.051375, -1.352344, -7.893227, 2.6224, -5.379088, 1.281748, -3.4148, 2.440645, -6.30571},
       {9, 2},
       9.229628360483919357513642},
      {3,
       {3.785315, -4.278062, 0.377561, 3.350183, 5.197343, 4.913993, -4.28307, 5.971039, -4.537913, 4.830388,
        0.881365, -5.026746, 1.417738, 0.29183, 7.3386},
       {0, 0, 1, 0, 0},
       1.69425040910275156238578},
  };
  for (const auto& c : cases) {
    const Tensor logits({c.labels.size(), c.k}, c.logits);
    EXPECT_NEAR(ce_value(logits, one_hot(c.k, c.labels)), c.expected, 1e-13);
  }
}

TEST(CrossEntropy, ClassCountMismatchIsDimensionError) {
  EXPECT_THROW(ce_value(Tensor({1, 3}), one_hot(2, {0})), DimensionError);
}

TEST(CrossEntropy, RejectsNonOneHotRows) {
  EXPECT_THROW(ce_value(Tensor({1, 2}), Tensor({1, 2}, {0.5, 0.5})), DimensionError);
}

TEST(Relu, SubgradientAtZeroIsZero) {
  Graph g;
  Var x = g.input(Tensor({3}, {-1, 0, 2}), true);
  Var r = ops::relu(x);
  EXPECT_EQ(r.value(), Tensor({3}, {0, 0, 2}));
  g.backward(ops::sum(r));
  EXPECT_EQ(g.grad(x), Tensor({3}, {0, 0, 1}));
}

TEST(Softmax, RowsSumToOne) {
  PGAT_REQUIRE_DOUBLE();
  Rng rng(4);
  Graph g;
  const Tensor p = ops::softmax(g.input(random_tensor({3, 5}, rng, -20, 20))).value();
  for (std::size_t n = 0; n < 3; ++n) {
    Real s = 0;
    for (std::size_t k = 0; k < 5; ++k) s += p[n * 5 + k];
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(MeanSquaredDistance, Value) {
  Graph g;
  Var a = g.input(Tensor({2, 2}, {1, 2, 3, 4}));
  Var b = g.input(Tensor({2, 2}, {1, 0, 0, 4}));
  // rows: 4 and 9, mean 6.5
  EXPECT_EQ(ops::mean_squared_distance(a, b).value().item(), 6.5);
}

// Every differentiable op against central differences on inputs in [-1, 1].
using Builder = std::function<Var(Graph&, Var)>;

void expect_matches_fd(const Tensor& x0, const Builder& build) {
  Graph g;
  Var x = g.input(x0, true);
  g.backward(build(g, x));
  const Tensor analytic = g.grad(x);
  const Tensor fd = finite_difference_gradient(
      [&](const Tensor& t) {
        Graph h;
        return build(h, h.input(t)).value().item();
      },
      x0, Real(1e-5));
  EXPECT_LE(relative_error(analytic, fd), 1e-4);
}

TEST(OpGradients, MatchFiniteDifferences) {
  PGAT_REQUIRE_DOUBLE();
  Rng rng(21);
  const Tensor w = random_tensor({4, 3}, rng), b = random_tensor({3}, rng);
  const Tensor k = random_tensor({2, 2, 3, 3}, rng), kb = random_tensor({2}, rng);
  const Tensor other = random_tensor({2, 3}, rng);
  const Tensor y = one_hot(3, {2, 0});
  auto sq = [](Var v) { return ops::sum(ops::mul(v, v)); };

  expect_matches_fd(random_tensor({2, 4}, rng),
                    [&](Graph& g, Var x) { return sq(ops::linear(x, g.input(w), g.input(b))); });
  expect_matches_fd(random_tensor({4, 3}, rng), [&](Graph& g, Var wv) {
    return sq(ops::linear(g.input(Tensor({2, 4}, {1, -1, 0.5, 2, 0.1, 0.3, -0.7, 1})), wv, g.input(b)));
  });
  expect_matches_fd(random_tensor({2, 2, 5, 5}, rng), [&](Graph& g, Var x) {
    return sq(ops::conv2d(x, g.input(k), g.input(kb), {2, 1}));
  });
  expect_matches_fd(random_tensor({2, 2, 3, 3}, rng), [&](Graph& g, Var kv) {
    Rng r2(99);
    return sq(ops::conv2d(g.input(random_tensor({1, 2, 4, 4}, r2)), kv, g.input(kb), {1, 1}));
  });
  expect_matches_fd(random_tensor({2, 3}, rng), [&](Graph&, Var x) { return sq(ops::relu(x)); });
  expect_matches_fd(random_tensor({2, 3}, rng), [&](Graph&, Var x) { return sq(ops::softmax(x)); });
  expect_matches_fd(random_tensor({2, 3}, rng),
                    [&](Graph&, Var x) { return ops::softmax_cross_entropy(x, y); });
  expect_matches_fd(random_tensor({2, 3}, rng),
                    [&](Graph& g, Var x) { return ops::mean_squared_distance(x, g.input(other)); });
  expect_matches_fd(random_tensor({2, 3}, rng),
                    [&](Graph& g, Var x) { return sq(ops::sub(ops::scale(x, 3), g.input(other))); });
  expect_matches_fd(random_tensor({2, 1, 2, 2}, rng), [&](Graph&, Var x) { return sq(ops::flatten(x)); });
}

TEST(Ops, ForwardIsDeterministic) {
  Rng rng(8);
  const Tensor x = random_tensor({2, 3, 8, 8}, rng), k = random_tensor({4, 3, 4, 4}, rng), b = random_tensor({4}, rng);
  EXPECT_EQ(conv_value(x, k, b, {2, 1}), conv_value(x, k, b, {2, 1}));
}

}  // namespace
}  // namespace pgat
