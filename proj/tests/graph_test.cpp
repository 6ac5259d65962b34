#include <gtest/gtest.h>

#include <cmath>

#include "pgat/errors.hpp"
#include "pgat/gradcheck.hpp"
#include "pgat/graph.hpp"
#include "pgat/ops.hpp"
#include "test_util.hpp"

namespace pgat {
namespace {

TEST(Graph, GradOfSumIsOnes) {
  Graph g;
  Var x = g.input(Tensor({2, 3}, {1, -2, 3, 0, 5, 6}), true);
  g.backward(ops::sum(x));
  EXPECT_EQ(g.grad(x), Tensor({2, 3}, Real(1)));
}

TEST(Graph, GradOfSumOfSquares) {
  Graph g;
  Var x = g.input(Tensor({2}, {1, 2}), true);
  g.backward(ops::sum(ops::mul(x, x)));
  EXPECT_EQ(g.grad(x), Tensor({2}, {2, 4}));
}

TEST(Graph, BackwardOnNonScalarIsUsageError) {
  Graph g;
  Var x = g.input(Tensor({2}, {1, 2}), true);
  EXPECT_THROW(g.backward(ops::scale(x, 2)), UsageError);
}

TEST(Graph, DoubleBackwardIsUsageError) {
  Graph g;
  Var x = g.input(Tensor({2}, {1, 2}), true);
  Var l = ops::sum(x);
  g.backward(l);
  EXPECT_TRUE(g.consumed());
  EXPECT_THROW(g.backward(l), UsageError);
}

TEST(Graph, GradBeforeBackwardIsUsageError) {
  Graph g;
  Var x = g.input(Tensor({1}, {1}), true);
  EXPECT_THROW(g.grad(x), UsageError);
}

TEST(Graph, UnreachedLeafGetsZeroGrad) {
  Graph g;
  Var x = g.input(Tensor({2}, {1, 2}), true);
  Var z = g.input(Tensor({3}, {1, 2, 3}), true);
  g.backward(ops::sum(x));
  EXPECT_EQ(g.grad(z), Tensor({3}));
}

TEST(Graph, SharedSubexpressionAccumulates) {
  // y = x + x  -> dy/dx = 2
  Graph g;
  Var x = g.input(Tensor({2}, {1, 2}), true);
  g.backward(ops::sum(ops::add(x, x)));
  EXPECT_EQ(g.grad(x), Tensor({2}, Real(2)));
}

TEST(Graph, BackwardIsLinear) {
  PGAT_REQUIRE_DOUBLE();
  Rng rng(5);
  const Tensor x0 = testing::random_tensor({3, 4}, rng);
  const Tensor w0 = testing::random_tensor({4, 2}, rng);
  const Tensor b0 = testing::random_tensor({2}, rng);
  auto grad_of = [&](Real a, Real b) {
    Graph g;
    Var x = g.input(x0, true);
    Var out = ops::linear(x, g.input(w0), g.input(b0));
    Var l1 = ops::sum(ops::mul(out, out));
    Var l2 = ops::sum(ops::relu(out));
    g.backward(ops::add(ops::scale(l1, a), ops::scale(l2, b)));
    return g.grad(x);
  };
  const Tensor g1 = grad_of(1, 0), g2 = grad_of(0, 1), mixed = grad_of(Real(2.5), Real(-1.5));
  EXPECT_LE(max_abs_diff(mixed, g1 * Real(2.5) + g2 * Real(-1.5)), 1e-10);
}

TEST(Gradcheck, SumGivesOnes) {
  PGAT_REQUIRE_DOUBLE();
  const Tensor x({4}, {0.5, -1, 2, 3});
  const Tensor fd = finite_difference_gradient(
      [](const Tensor& t) {
        Real s = 0;
        for (Real v : t.data()) s += v;
        return s;
      },
      x, Real(1e-5));
  for (Real v : fd.data()) EXPECT_NEAR(v, 1.0, 1e-9);
}

TEST(Gradcheck, SquareAtThree) {
  PGAT_REQUIRE_DOUBLE();
  const Tensor fd = finite_difference_gradient([](const Tensor& t) { return t[0] * t[0]; }, Tensor({1}, {3}),
                                               Real(1e-5));
  EXPECT_NEAR(fd[0], 6.0, 1e-6);
}

TEST(Gradcheck, RejectsNonPositiveStep) {
  EXPECT_THROW(finite_difference_gradient([](const Tensor&) { return Real(0); }, Tensor({1}), 0), ConfigError);
}

TEST(Gradcheck, RelativeError) {
  PGAT_REQUIRE_DOUBLE();
  EXPECT_EQ(relative_error(Tensor({2}, {1, 2}), Tensor({2}, {1, 2})), 0);
  EXPECT_NEAR(relative_error(Tensor({2}, {1, 2.2}), Tensor({2}, {1, 2})), 0.1, 1e-12);
}

}  // namespace
}  // namespace pgat
