#pragma once

// Dense row-major GEMM kernels with a fixed accumulation order.

#include <cstddef>

#include "pgat/real.hpp"

namespace pgat::kernels {

/// C[M,N] += A[M,K] * B[K,N]
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const Real* A, const Real* B, Real* C);

/// C[M,N] += A[K,M]^T * B[K,N]
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const Real* A, const Real* B, Real* C);

/// C[M,N] += A[M,K] * B[N,K]^T
void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const Real* A, const Real* B, Real* C);

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kh, kw, stride, padding;
  std::size_t out_h, out_w;

  std::size_t col_rows() const { return channels * kh * kw; }
  std::size_t col_cols() const { return out_h * out_w; }
};

/// Unfolds one image [C,H,W] into columns [C*kh*kw, out_h*out_w].
void im2col(const ConvGeometry& g, const Real* image, Real* cols);

/// Adjoint of im2col: scatters columns back, accumulating into image.
void col2im(const ConvGeometry& g, const Real* cols, Real* image);

}  // namespace pgat::kernels
