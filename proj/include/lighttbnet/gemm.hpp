#pragma once

#include <cstddef>

namespace ltbn {

// Row-major accumulating kernels, single-threaded and deterministic.
//   gemm_nn: C[m,n] += A[m,k] * B[k,n]
//   gemm_nt: C[m,n] += A[m,k] * B[n,k]^T
//   gemm_tn: C[m,n] += A[k,m]^T * B[k,n]
template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);
template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);
template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c);

}  // namespace ltbn
