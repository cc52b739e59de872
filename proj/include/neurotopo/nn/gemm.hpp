#pragma once

#include <algorithm>
#include <cstddef>

namespace neurotopo::nn {

// Row-major matrix products, accumulating into C. Hand-rolled on purpose:
// the training stack carries no BLAS dependency. The kernels lean on the
// compiler vectorizing the innermost contiguous loop; the column tile keeps
// the C rows and the active B row resident in cache.

// C (MxN) += A (MxK) * B (KxN)
inline void gemm_nn(std::size_t M, std::size_t N, std::size_t K,
                    const double* A, const double* B, double* C) {
  constexpr std::size_t kTile = 256;
  for (std::size_t jc = 0; jc < N; jc += kTile) {
    const std::size_t jn = std::min(kTile, N - jc);
    std::size_t i = 0;
    for (; i + 4 <= M; i += 4) {
      const double* a0 = A + (i + 0) * K;
      const double* a1 = A + (i + 1) * K;
      const double* a2 = A + (i + 2) * K;
      const double* a3 = A + (i + 3) * K;
      double* c0 = C + (i + 0) * N + jc;
      double* c1 = C + (i + 1) * N + jc;
      double* c2 = C + (i + 2) * N + jc;
      double* c3 = C + (i + 3) * N + jc;
      for (std::size_t k = 0; k < K; ++k) {
        const double* b = B + k * N + jc;
        const double v0 = a0[k], v1 = a1[k], v2 = a2[k], v3 = a3[k];
        for (std::size_t j = 0; j < jn; ++j) {
          const double bj = b[j];
          c0[j] += v0 * bj;
          c1[j] += v1 * bj;
          c2[j] += v2 * bj;
          c3[j] += v3 * bj;
        }
      }
    }
    for (; i < M; ++i) {
      const double* a = A + i * K;
      double* c = C + i * N + jc;
      for (std::size_t k = 0; k < K; ++k) {
        const double* b = B + k * N + jc;
        const double v = a[k];
        for (std::size_t j = 0; j < jn; ++j) c[j] += v * b[j];
      }
    }
  }
}

// C (MxN) += A (MxK) * B^T, with B stored (NxK): dot products over k.
inline void gemm_nt(std::size_t M, std::size_t N, std::size_t K,
                    const double* A, const double* B, double* C) {
  for (std::size_t i = 0; i < M; ++i) {
    const double* a = A + i * K;
    std::size_t j = 0;
    for (; j + 2 <= N; j += 2) {
      const double* b0 = B + (j + 0) * K;
      const double* b1 = B + (j + 1) * K;
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double av = a[k];
        s0 += av * b0[k];
        s1 += av * b1[k];
      }
      C[i * N + j] += s0;
      C[i * N + j + 1] += s1;
    }
    for (; j < N; ++j) {
      const double* b = B + j * K;
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += a[k] * b[k];
      C[i * N + j] += s;
    }
  }
}

// C (MxN) += A^T * B, with A stored (KxM), B stored (KxN): rank-1 updates.
inline void gemm_tn(std::size_t M, std::size_t N, std::size_t K,
                    const double* A, const double* B, double* C) {
  for (std::size_t k = 0; k < K; ++k) {
    const double* arow = A + k * M;
    const double* b = B + k * N;
    for (std::size_t i = 0; i < M; ++i) {
      const double v = arow[i];
      if (v == 0.0) continue;
      double* c = C + i * N;
      for (std::size_t j = 0; j < N; ++j) c[j] += v * b[j];
    }
  }
}

}  // namespace neurotopo::nn
