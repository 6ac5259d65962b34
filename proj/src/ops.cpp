#include "pgat/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kernels.hpp"
#include "pgat/errors.hpp"

namespace pgat::ops {

namespace {

Graph& graph_of(Var a) {
  if (a.graph == nullptr) throw UsageError("Var is not bound to a graph");
  return *a.graph;
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* name) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": " + name + " must have rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

}  // namespace

Var linear(Var x, Var w, Var b) {
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  const Tensor& bv = b.value();
  require_rank(xv, 2, "linear", "x");
  require_rank(wv, 2, "linear", "w");
  require_rank(bv, 1, "linear", "b");
  if (xv.dim(1) != wv.dim(0) || wv.dim(1) != bv.dim(0)) {
    throw DimensionError("linear: x " + shape_string(xv.shape()) + " incompatible with w " + shape_string(wv.shape()) +
                         " and b " + shape_string(bv.shape()));
  }
  const std::size_t B = xv.dim(0), I = xv.dim(1), O = wv.dim(1);
  Tensor out({B, O});
  for (std::size_t n = 0; n < B; ++n) std::copy(bv.data().begin(), bv.data().end(), out.data().begin() + n * O);
  kernels::gemm_nn(B, O, I, xv.data().data(), wv.data().data(), out.data().data());

  return graph_of(x).record(std::move(out), {x, w, b}, [B, I, O](BackwardContext& ctx) {
    const Real* g = ctx.output_grad().data().data();
    if (ctx.needs_grad(0)) {
      kernels::gemm_nt(B, I, O, g, ctx.input(1).data().data(), ctx.input_grad(0).data().data());
    }
    if (ctx.needs_grad(1)) {
      kernels::gemm_tn(I, O, B, ctx.input(0).data().data(), g, ctx.input_grad(1).data().data());
    }
    if (ctx.needs_grad(2)) {
      Real* db = ctx.input_grad(2).data().data();
      for (std::size_t n = 0; n < B; ++n)
        for (std::size_t o = 0; o < O; ++o) db[o] += g[n * O + o];
    }
  });
}

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (stride == 0) throw ConfigError("conv2d: stride must be positive");
  const std::size_t padded = in + 2 * padding;
  if (padded < kernel) {
    throw ConfigError("conv2d: kernel " + std::to_string(kernel) + " larger than padded input " +
                      std::to_string(padded));
  }
  if ((padded - kernel) % stride != 0) {
    throw ConfigError("conv2d: non-integral output size (" + std::to_string(in) + " + 2*" + std::to_string(padding) +
                      " - " + std::to_string(kernel) + ") / " + std::to_string(stride));
  }
  return (padded - kernel) / stride + 1;
}

Var conv2d(Var x, Var k, Var b, Conv2dOptions opts) {
  const Tensor& xv = x.value();
  const Tensor& kv = k.value();
  const Tensor& bv = b.value();
  require_rank(xv, 4, "conv2d", "x");
  require_rank(kv, 4, "conv2d", "kernel");
  require_rank(bv, 1, "conv2d", "bias");
  if (xv.dim(1) != kv.dim(1) || kv.dim(0) != bv.dim(0)) {
    throw DimensionError("conv2d: x " + shape_string(xv.shape()) + " incompatible with kernel " +
                         shape_string(kv.shape()) + " and bias " + shape_string(bv.shape()));
  }
  kernels::ConvGeometry geo{};
  geo.channels = xv.dim(1);
  geo.height = xv.dim(2);
  geo.width = xv.dim(3);
  geo.kh = kv.dim(2);
  geo.kw = kv.dim(3);
  geo.stride = opts.stride;
  geo.padding = opts.padding;
  geo.out_h = conv_output_size(geo.height, geo.kh, opts.stride, opts.padding);
  geo.out_w = conv_output_size(geo.width, geo.kw, opts.stride, opts.padding);

  const std::size_t B = xv.dim(0), F = kv.dim(0);
  const std::size_t rows = geo.col_rows(), hw = geo.col_cols();
  const std::size_t in_size = xv.sample_size(), out_size = F * hw;

  Tensor out({B, F, geo.out_h, geo.out_w});
  std::vector<Real> cols(rows * hw);
  for (std::size_t n = 0; n < B; ++n) {
    Real* o = out.data().data() + n * out_size;
    for (std::size_t f = 0; f < F; ++f) std::fill(o + f * hw, o + (f + 1) * hw, bv[f]);
    kernels::im2col(geo, xv.data().data() + n * in_size, cols.data());
    kernels::gemm_nn(F, hw, rows, kv.data().data(), cols.data(), o);
  }

  return graph_of(x).record(std::move(out), {x, k, b}, [geo, B, F, in_size, out_size](BackwardContext& ctx) {
    const std::size_t rows = geo.col_rows(), hw = geo.col_cols();
    const Real* g = ctx.output_grad().data().data();
    const bool need_x = ctx.needs_grad(0), need_k = ctx.needs_grad(1);
    std::vector<Real> cols(rows * hw);
    std::vector<Real> dcols(need_x ? rows * hw : 0);
    for (std::size_t n = 0; n < B; ++n) {
      const Real* gn = g + n * out_size;
      if (need_k) {
        kernels::im2col(geo, ctx.input(0).data().data() + n * in_size, cols.data());
        kernels::gemm_nt(F, rows, hw, gn, cols.data(), ctx.input_grad(1).data().data());
      }
      if (need_x) {
        std::fill(dcols.begin(), dcols.end(), Real(0));
        kernels::gemm_tn(rows, hw, F, ctx.input(1).data().data(), gn, dcols.data());
        kernels::col2im(geo, dcols.data(), ctx.input_grad(0).data().data() + n * in_size);
      }
    }
    if (ctx.needs_grad(2)) {
      Real* db = ctx.input_grad(2).data().data();
      for (std::size_t n = 0; n < B; ++n)
        for (std::size_t f = 0; f < F; ++f) {
          const Real* gf = g + n * out_size + f * hw;
          Real s = 0;
          for (std::size_t i = 0; i < hw; ++i) s += gf[i];
          db[f] += s;
        }
    }
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (Real& v : out.data()) v = v > Real(0) ? v : Real(0);
  return graph_of(x).record(std::move(out), {x}, [](BackwardContext& ctx) {
    const Tensor& in = ctx.input(0);
    const Tensor& g = ctx.output_grad();
    Tensor& dx = ctx.input_grad(0);
    for (std::size_t i = 0; i < in.numel(); ++i)
      if (in[i] > Real(0)) dx[i] += g[i];
  });
}

Var flatten(Var x) {
  const Tensor& xv = x.value();
  if (xv.rank() < 1) throw DimensionError("flatten: scalar input");
  Tensor out = xv.reshaped({xv.dim(0), xv.sample_size()});
  return graph_of(x).record(std::move(out), {x}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.output_grad();
    Tensor& dx = ctx.input_grad(0);
    for (std::size_t i = 0; i < g.numel(); ++i) dx[i] += g[i];
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  return graph_of(a).record(a.value() + b.value(), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.output_grad();
    for (std::size_t k = 0; k < 2; ++k)
      if (ctx.needs_grad(k)) ctx.input_grad(k) += g;
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  return graph_of(a).record(a.value() - b.value(), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.output_grad();
    if (ctx.needs_grad(0)) ctx.input_grad(0) += g;
    if (ctx.needs_grad(1)) ctx.input_grad(1) -= g;
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] *= b.value()[i];
  return graph_of(a).record(std::move(out), {a, b}, [](BackwardContext& ctx) {
    const Tensor& g = ctx.output_grad();
    for (std::size_t k = 0; k < 2; ++k) {
      if (!ctx.needs_grad(k)) continue;
      const Tensor& other = ctx.input(1 - k);
      Tensor& d = ctx.input_grad(k);
      for (std::size_t i = 0; i < g.numel(); ++i) d[i] += g[i] * other[i];
    }
  });
}

Var scale(Var a, Real s) {
  return graph_of(a).record(a.value() * s, {a}, [s](BackwardContext& ctx) {
    const Tensor& g = ctx.output_grad();
    Tensor& d = ctx.input_grad(0);
    for (std::size_t i = 0; i < g.numel(); ++i) d[i] += g[i] * s;
  });
}

Var sum(Var x) {
  Real s = 0;
  for (Real v : x.value().data()) s += v;
  return graph_of(x).record(Tensor({1}, {s}), {x}, [](BackwardContext& ctx) {
    const Real g = ctx.output_grad()[0];
    for (Real& d : ctx.input_grad(0).data()) d += g;
  });
}

Var softmax(Var logits) {
  const Tensor& z = logits.value();
  require_rank(z, 2, "softmax", "logits");
  const std::size_t B = z.dim(0), K = z.dim(1);
  Tensor p(z.shape());
  for (std::size_t n = 0; n < B; ++n) {
    const Real* zr = z.data().data() + n * K;
    Real* pr = p.data().data() + n * K;
    const Real m = *std::max_element(zr, zr + K);
    Real s = 0;
    for (std::size_t k = 0; k < K; ++k) s += pr[k] = std::exp(zr[k] - m);
    for (std::size_t k = 0; k < K; ++k) pr[k] /= s;
  }
  return graph_of(logits).record(std::move(p), {logits}, [B, K](BackwardContext& ctx) {
    const Tensor& p = ctx.output();
    const Tensor& g = ctx.output_grad();
    Tensor& dz = ctx.input_grad(0);
    for (std::size_t n = 0; n < B; ++n) {
      Real dot = 0;
      for (std::size_t k = 0; k < K; ++k) dot += g[n * K + k] * p[n * K + k];
      for (std::size_t k = 0; k < K; ++k) dz[n * K + k] += p[n * K + k] * (g[n * K + k] - dot);
    }
  });
}

Var softmax_cross_entropy(Var logits, const Tensor& one_hot) {
  const Tensor& z = logits.value();
  require_rank(z, 2, "softmax_cross_entropy", "logits");
  if (one_hot.shape() != z.shape()) {
    throw DimensionError("softmax_cross_entropy: logits " + shape_string(z.shape()) + " vs labels " +
                         shape_string(one_hot.shape()));
  }
  const std::size_t B = z.dim(0), K = z.dim(1);
  std::vector<std::size_t> target(B);
  for (std::size_t n = 0; n < B; ++n) {
    std::size_t ones = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const Real y = one_hot[n * K + k];
      if (y == Real(1)) {
        ++ones;
        target[n] = k;
      } else if (y != Real(0)) {
        ones = 2;
      }
    }
    if (ones != 1) throw DimensionError("softmax_cross_entropy: label row " + std::to_string(n) + " is not one-hot");
  }

  Tensor probs(z.shape());
  Real total = 0;
  for (std::size_t n = 0; n < B; ++n) {
    const Real* zr = z.data().data() + n * K;
    Real* pr = probs.data().data() + n * K;
    const Real m = *std::max_element(zr, zr + K);
    Real s = 0;
    for (std::size_t k = 0; k < K; ++k) s += pr[k] = std::exp(zr[k] - m);
    for (std::size_t k = 0; k < K; ++k) pr[k] /= s;
    total += (m + std::log(s)) - zr[target[n]];
  }
  const Real inv_b = Real(1) / static_cast<Real>(B);
  return graph_of(logits).record(
      Tensor({1}, {total * inv_b}), {logits},
      [probs = std::move(probs), target = std::move(target), B, K, inv_b](BackwardContext& ctx) {
        const Real g = ctx.output_grad()[0] * inv_b;
        Tensor& dz = ctx.input_grad(0);
        for (std::size_t n = 0; n < B; ++n) {
          for (std::size_t k = 0; k < K; ++k) {
            const Real y = k == target[n] ? Real(1) : Real(0);
            dz[n * K + k] += g * (probs[n * K + k] - y);
          }
        }
      });
}

Var mean_squared_distance(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mean_squared_distance");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() < 1) throw DimensionError("mean_squared_distance: scalar input");
  const Real inv_b = Real(1) / static_cast<Real>(av.dim(0));
  Real s = 0;
  for (std::size_t i = 0; i < av.numel(); ++i) {
    const Real d = av[i] - bv[i];
    s += d * d;
  }
  return graph_of(a).record(Tensor({1}, {s * inv_b}), {a, b}, [inv_b](BackwardContext& ctx) {
    const Tensor& av = ctx.input(0);
    const Tensor& bv = ctx.input(1);
    const Real g = ctx.output_grad()[0] * Real(2) * inv_b;
    const bool need_a = ctx.needs_grad(0), need_b = ctx.needs_grad(1);
    for (std::size_t i = 0; i < av.numel(); ++i) {
      const Real d = g * (av[i] - bv[i]);
      if (need_a) ctx.input_grad(0)[i] += d;
      if (need_b) ctx.input_grad(1)[i] -= d;
    }
  });
}

}  // namespace pgat::ops
