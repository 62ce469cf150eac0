#pragma once

namespace schedsyn::tensor {

// C (MxN, row stride ldc) += A (MxK, row stride lda) * B (KxN, row stride ldb)
void gemm_nn(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
             float* C, int ldc);

// C (MxN) += A^T * B with A stored (KxM, row stride lda)
void gemm_tn(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
             float* C, int ldc);

// C (MxN) += A * B^T with B stored (NxK, row stride ldb)
void gemm_nt(int M, int N, int K, const float* A, int lda, const float* B, int ldb,
             float* C, int ldc);

}  // namespace schedsyn::tensor
