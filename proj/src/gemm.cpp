#include "lighttbnet/gemm.hpp"

namespace ltbn {

namespace {
constexpr std::size_t kBlockK = 128;
constexpr std::size_t kBlockN = 1024;
}  // namespace

template <typename T>
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  // Blocked i-k-j; the inner loop is a contiguous axpy over a row of B.
  for (std::size_t j0 = 0; j0 < n; j0 += kBlockN) {
    const std::size_t j1 = j0 + kBlockN < n ? j0 + kBlockN : n;
    for (std::size_t p0 = 0; p0 < k; p0 += kBlockK) {
      const std::size_t p1 = p0 + kBlockK < k ? p0 + kBlockK : k;
      for (std::size_t i = 0; i < m; ++i) {
        T* __restrict crow = c + i * n;
        const T* arow = a + i * k;
        for (std::size_t p = p0; p < p1; ++p) {
          const T av = arow[p];
          if (av == T(0)) continue;
          const T* __restrict brow = b + p * n;
          for (std::size_t j = j0; j < j1; ++j) crow[j] += av * brow[j];
        }
      }
    }
  }
}

template <typename T>
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  // Dot products of contiguous rows. Eight fixed lanes keep the summation
  // order independent of the compiler while still vectorizing.
  constexpr std::size_t L = 8;
  for (std::size_t i = 0; i < m; ++i) {
    const T* __restrict arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const T* __restrict brow = b + j * k;
      T acc[L] = {};
      std::size_t p = 0;
      for (; p + L <= k; p += L) {
        for (std::size_t l = 0; l < L; ++l) acc[l] += arow[p + l] * brow[p + l];
      }
      T s = T(0);
      for (; p < k; ++p) s += arow[p] * brow[p];
      for (std::size_t l = 0; l < L; ++l) s += acc[l];
      c[i * n + j] += s;
    }
  }
}

template <typename T>
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const T* a, const T* b, T* c) {
  for (std::size_t p = 0; p < k; ++p) {
    const T* arow = a + p * m;
    const T* __restrict brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const T av = arow[i];
      if (av == T(0)) continue;
      T* __restrict crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template void gemm_nn<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*);
template void gemm_nn<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
template void gemm_nt<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*);
template void gemm_nt<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);
template void gemm_tn<float>(std::size_t, std::size_t, std::size_t, const float*, const float*, float*);
template void gemm_tn<double>(std::size_t, std::size_t, std::size_t, const double*, const double*, double*);

}  // namespace ltbn
