#pragma once

#include <cstddef>

#include "pgat/graph.hpp"
#include "pgat/tensor.hpp"

namespace pgat::ops {

/// out[n,o] = sum_i x[n,i] * w[i,o] + b[o]
Var linear(Var x, Var w, Var b);

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Cross-correlation of x[B,C,H,W] with k[F,C,Kh,Kw] plus per-filter bias b[F].
/// Throws ConfigError when (H + 2*padding - Kh) is not a multiple of stride.
Var conv2d(Var x, Var k, Var b, Conv2dOptions opts = {});

/// Output spatial extent for a conv, validating integrality.
std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);

/// max(x, 0); the derivative at exactly 0 is taken as 0.
Var relu(Var x);

/// [B, ...] -> [B, prod(...)]
Var flatten(Var x);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, Real s);

/// Sum of all elements, as a [1] tensor.
Var sum(Var x);

/// Row-wise softmax of [B,K].
Var softmax(Var logits);

/// Mean over the batch of -log softmax(logits)[label]. `one_hot` is [B,K]
/// with exactly one 1 per row. Uses log-sum-exp stabilisation.
Var softmax_cross_entropy(Var logits, const Tensor& one_hot);

/// Mean over the batch of the row-wise squared L2 distance ||a_n - b_n||^2.
Var mean_squared_distance(Var a, Var b);

}  // namespace pgat::ops
