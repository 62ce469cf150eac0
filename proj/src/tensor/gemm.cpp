#include "tensor/gemm.hpp"

#include <vector>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#define SCHEDSYN_GEMM_AVX2 1
#endif

namespace schedsyn::tensor {

namespace {

// Plain path for edge tiles and non-SIMD builds. Per output element the
// k-accumulation order matches the SIMD kernel, so results do not depend on
// which path a tile took the previous run.
void gemm_nn_tail(int i0, int i1, int j0, int j1, int K, const float* A, int lda,
                  const float* B, int ldb, float* C, int ldc) {
  for (int i = i0; i < i1; ++i) {
    for (int j = j0; j < j1; ++j) {
      float acc = 0.0f;
      const float* a = A + static_cast<size_t>(i) * lda;
      const float* b = B + j;
      for (int k = 0; k < K; ++k) acc += a[k] * b[static_cast<size_t>(k) * ldb];
      C[static_cast<size_t>(i) * ldc + j] += acc;
    }
  }
}

#ifdef SCHEDSYN_GEMM_AVX2

// 6x16 register tile: 12 FMA accumulators, two B loads and six A broadcasts
// per k step.
template <int ROWS>
inline void kernel_rx16(int K, const float* A, int lda, const float* B, int ldb,
                        float* C, int ldc) {
  __m256 acc0[ROWS], acc1[ROWS];
  for (int r = 0; r < ROWS; ++r) {
    acc0[r] = _mm256_setzero_ps();
    acc1[r] = _mm256_setzero_ps();
  }
  for (int k = 0; k < K; ++k) {
    const float* brow = B + static_cast<size_t>(k) * ldb;
    const __m256 b0 = _mm256_loadu_ps(brow);
    const __m256 b1 = _mm256_loadu_ps(brow + 8);
    for (int r = 0; r < ROWS; ++r) {
      const __m256 a = _mm256_broadcast_ss(A + static_cast<size_t>(r) * lda + k);
      acc0[r] = _mm256_fmadd_ps(a, b0, acc0[r]);
      acc1[r] = _mm256_fmadd_ps(a, b1, acc1[r]);
    }
  }
  for (int r = 0; r < ROWS; ++r) {
    float* crow = C + static_cast<size_t>(r) * ldc;
    _mm256_storeu_ps(crow, _mm256_add_ps(_mm256_loadu_ps(crow), acc0[r]));
    _mm256_storeu_ps(crow + 8, _mm256_add_ps(_mm256_loadu_ps(crow + 8), acc1[r]));
  }
}

#endif  // SCHEDSYN_GEMM_AVX2

}  // namespace

void gemm_nn(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
             float* C, int ldc) {
  if (M <= 0 || N <= 0 || K <= 0) return;
#ifdef SCHEDSYN_GEMM_AVX2
  const int n16 = N - (N % 16);
  const int m6 = M - (M % 6);
  for (int j = 0; j < n16; j += 16) {
    int i = 0;
    for (; i < m6; i += 6) {
      kernel_rx16<6>(K, A + static_cast<size_t>(i) * lda, lda, B + j, ldb,
                     C + static_cast<size_t>(i) * ldc + j, ldc);
    }
    switch (M - i) {
      case 5: kernel_rx16<5>(K, A + static_cast<size_t>(i) * lda, lda, B + j, ldb,
                             C + static_cast<size_t>(i) * ldc + j, ldc); break;
      case 4: kernel_rx16<4>(K, A + static_cast<size_t>(i) * lda, lda, B + j, ldb,
                             C + static_cast<size_t>(i) * ldc + j, ldc); break;
      case 3: kernel_rx16<3>(K, A + static_cast<size_t>(i) * lda, lda, B + j, ldb,
                             C + static_cast<size_t>(i) * ldc + j, ldc); break;
      case 2: kernel_rx16<2>(K, A + static_cast<size_t>(i) * lda, lda, B + j, ldb,
                             C + static_cast<size_t>(i) * ldc + j, ldc); break;
      case 1: kernel_rx16<1>(K, A + static_cast<size_t>(i) * lda, lda, B + j, ldb,
                             C + static_cast<size_t>(i) * ldc + j, ldc); break;
      default: break;
    }
  }
  if (n16 < N) gemm_nn_tail(0, M, n16, N, K, A, lda, B, ldb, C, ldc);
#else
  gemm_nn_tail(0, M, 0, N, K, A, lda, B, ldb, C, ldc);
#endif
}

namespace {

thread_local std::vector<float> g_scratch;

// dst (rows x cols, dense) = src^T where src is (cols x rows) with stride lds.
const float* transpose_to_scratch(int rows, int cols, const float* src, int lds) {
  g_scratch.resize(static_cast<size_t>(rows) * cols);
  float* dst = g_scratch.data();
  for (int c = 0; c < cols; ++c) {
    const float* s = src + static_cast<size_t>(c) * lds;
    for (int r = 0; r < rows; ++r) dst[static_cast<size_t>(r) * cols + c] = s[r];
  }
  return dst;
}

}  // namespace

void gemm_tn(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
             float* C, int ldc) {
  if (M <= 0 || N <= 0 || K <= 0) return;
  const float* At = transpose_to_scratch(M, K, A, lda);
  gemm_nn(M, N, K, At, K, B, ldb, C, ldc);
}

void gemm_nt(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
             float* C, int ldc) {
  if (M <= 0 || N <= 0 || K <= 0) return;
  const float* Bt = transpose_to_scratch(K, N, B, ldb);
  gemm_nn(M, N, K, A, lda, Bt, N, C, ldc);
}

}  // namespace schedsyn::tensor
