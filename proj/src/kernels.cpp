#include "kernels.hpp"

#include <vector>

namespace pgat::kernels {

void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const Real* A, const Real* B, Real* C) {
  for (std::size_t i = 0; i < M; ++i) {
    Real* c = C + i * N;
    const Real* a = A + i * K;
    for (std::size_t k = 0; k < K; ++k) {
      const Real aik = a[k];
      if (aik == Real(0)) continue;
      const Real* b = B + k * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += aik * b[j];
    }
  }
}

void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const Real* A, const Real* B, Real* C) {
  for (std::size_t k = 0; k < K; ++k) {
    const Real* a = A + k * M;
    const Real* b = B + k * N;
    for (std::size_t i = 0; i < M; ++i) {
      const Real aki = a[i];
      if (aki == Real(0)) continue;
      Real* c = C + i * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += aki * b[j];
    }
  }
}

void gemm_nt(std::size_t M, std::size_t N, std::size_t K, const Real* A, const Real* B, Real* C) {
  std::vector<Real> bt(K * N);
  for (std::size_t j = 0; j < N; ++j)
    for (std::size_t k = 0; k < K; ++k) bt[k * N + j] = B[j * K + k];
  gemm_nn(M, N, K, A, bt.data(), C);
}

void im2col(const ConvGeometry& g, const Real* image, Real* cols) {
  const std::size_t hw = g.col_cols();
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    const Real* plane = image + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj, ++row) {
        Real* out = cols + row * hw;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.padding);
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.padding);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) &&
                                ix < static_cast<long>(g.width);
            out[oy * g.out_w + ox] = inside ? plane[iy * static_cast<long>(g.width) + ix] : Real(0);
          }
        }
      }
    }
  }
}

void col2im(const ConvGeometry& g, const Real* cols, Real* image) {
  const std::size_t hw = g.col_cols();
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.channels; ++c) {
    Real* plane = image + c * g.height * g.width;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj, ++row) {
        const Real* in = cols + row * hw;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.padding);
            if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
            plane[iy * static_cast<long>(g.width) + ix] += in[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

}  // namespace pgat::kernels
