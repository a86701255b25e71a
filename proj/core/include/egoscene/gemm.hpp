#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace egoscene::nn {

// Worker count for row-parallel kernels. Results are bitwise independent of
// the thread count; this only trades wall-clock time.
inline void set_num_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

// Minimal row-major matrix kernels, shaped so the hot loops autovectorize.
// Each output row is owned by exactly one thread, so results are bitwise
// identical for any thread count.

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void gemm_nn(std::size_t M, std::size_t N, std::size_t K, const T* A,
             std::size_t lda, const T* B, std::size_t ldb, T* C,
             std::size_t ldc) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (M >= 64)
#endif
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(M); ++i) {
    const T* a = A + static_cast<std::size_t>(i) * lda;
    T* c = C + static_cast<std::size_t>(i) * ldc;
    for (std::size_t k = 0; k < K; ++k) {
      const T aik = a[k];
      const T* b = B + k * ldb;
      for (std::size_t j = 0; j < N; ++j) {
        c[j] += aik * b[j];
      }
    }
  }
}

// C[M,N] += A[K,M]^T * B[K,N]. Sequential; used for weight gradients where
// callers accumulate across batch elements in a fixed order.
template <typename T>
void gemm_tn(std::size_t M, std::size_t N, std::size_t K, const T* A,
             std::size_t lda, const T* B, std::size_t ldb, T* C,
             std::size_t ldc) {
  for (std::size_t k = 0; k < K; ++k) {
    const T* a = A + k * lda;
    const T* b = B + k * ldb;
    for (std::size_t i = 0; i < M; ++i) {
      const T aki = a[i];
      T* c = C + i * ldc;
      for (std::size_t j = 0; j < N; ++j) {
        c[j] += aki * b[j];
      }
    }
  }
}

}  // namespace egoscene::nn
