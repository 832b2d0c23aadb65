#pragma once

// Fortran BLAS gemm ABI (LP64): every scalar by reference, column-major
// storage, and two trailing hidden lengths for the CHARACTER arguments.

#include <complex>
#include <cstddef>

namespace scilib::shim {

template <class T>
using GemmFn = void (*)(const char* transa, const char* transb, const int* m,
                        const int* n, const int* k, const T* alpha, const T* a,
                        const int* lda, const T* b, const int* ldb, const T* beta,
                        T* c, const int* ldc, std::size_t transa_len,
                        std::size_t transb_len);

// The argument list of one gemm call, exactly as received.
template <class T>
struct GemmArgList {
  const char* transa;
  const char* transb;
  const int* m;
  const int* n;
  const int* k;
  const T* alpha;
  const T* a;
  const int* lda;
  const T* b;
  const int* ldb;
  const T* beta;
  T* c;
  const int* ldc;
  std::size_t transa_len;
  std::size_t transb_len;

  void forward_to(GemmFn<T> fn) const {
    fn(transa, transb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc, transa_len,
       transb_len);
  }
};

using cfloat = std::complex<float>;
using cdouble = std::complex<double>;

// Next definitions of the four gemm symbols.
struct HostBlas {
  GemmFn<float> sgemm = nullptr;
  GemmFn<double> dgemm = nullptr;
  GemmFn<cfloat> cgemm = nullptr;
  GemmFn<cdouble> zgemm = nullptr;
};

}  // namespace scilib::shim
