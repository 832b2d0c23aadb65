// Exported level-3 entry points of the preload library. Each symbol shadows
// the BLAS definition that follows it in the loader's search order and
// forwards there through the interceptor.

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <type_traits>

#include "scilib/scilib_shim.h"

#include "interceptor.hpp"
#include "resolve.hpp"

namespace {

using namespace scilib;
using namespace scilib::shim;

[[noreturn]] void fatal(const char* what) {
  std::fprintf(stderr, "scilib: fatal: %s\n", what);
  std::fflush(stderr);
  std::_Exit(127);
}

template <class T>
GemmFn<T> try_resolve(const char* mangled, const char* plain) {
  try {
    return reinterpret_cast<GemmFn<T>>(resolve_next_any(mangled, plain));
  } catch (const Error&) {
    return nullptr;
  }
}

struct ShimState {
  HostBlas host;
  Interceptor* interceptor = nullptr;  // null when configuration failed
};

ShimState* g_state = nullptr;

void at_exit_hook() {
  if (g_state && g_state->interceptor) g_state->interceptor->finish();
}

// Lazy: built on the first intercepted call, never during library load.
// Symbols missing from the host BLAS stay null and are only fatal when that
// routine is actually called.
ShimState& state() {
  static std::once_flag once;
  std::call_once(once, [] {
    auto* st = new ShimState();
    st->host.sgemm = try_resolve<float>("sgemm_", "sgemm");
    st->host.dgemm = try_resolve<double>("dgemm_", "dgemm");
    st->host.cgemm = try_resolve<cfloat>("cgemm_", "cgemm");
    st->host.zgemm = try_resolve<cdouble>("zgemm_", "zgemm");
    try {
      OffloadConfig cfg = config_from_environ();
      st->interceptor = new Interceptor(
          std::move(cfg), st->host, std::make_unique<HostPassthroughBackend>(st->host));
    } catch (const Error& e) {
      std::fprintf(stderr, "scilib: %s; interception disabled\n", e.what());
    }
    g_state = st;
    std::atexit(at_exit_hook);
  });
  return *g_state;
}

template <class T>
GemmFn<T> host_slot(const HostBlas& h) {
  if constexpr (std::is_same_v<T, float>) return h.sgemm;
  else if constexpr (std::is_same_v<T, double>) return h.dgemm;
  else if constexpr (std::is_same_v<T, cfloat>) return h.cgemm;
  else return h.zgemm;
}

template <class T>
void dispatch(Routine r, const char* symbol, const GemmArgList<T>& args) {
  ShimState& st = state();
  GemmFn<T> host = host_slot<T>(st.host);
  if (host == nullptr) {
    std::string msg = std::string("cannot resolve next definition of '") + symbol + "'";
    fatal(msg.c_str());
  }
  if (st.interceptor == nullptr) {
    args.forward_to(host);
    return;
  }
  st.interceptor->gemm(r, args);
}

}  // namespace

#define SCILIB_GEMM_EXPORT(name, T, routine, mangled)                                    \
  extern "C" SCILIB_SHIM_EXPORT void name(                                          \
      const char* transa, const char* transb, const int* m, const int* n,           \
      const int* k, const T* alpha, const T* a, const int* lda, const T* b,         \
      const int* ldb, const T* beta, T* c, const int* ldc, std::size_t transa_len,  \
      std::size_t transb_len) {                                                     \
    dispatch<T>(routine, mangled,                                                  \
                GemmArgList<T>{transa, transb, m, n, k, alpha, a, lda, b, ldb, beta,  \
                               c, ldc, transa_len, transb_len});                     \
  }

SCILIB_GEMM_EXPORT(sgemm_, float, Routine::Sgemm, "sgemm_")
SCILIB_GEMM_EXPORT(dgemm_, double, Routine::Dgemm, "dgemm_")
SCILIB_GEMM_EXPORT(cgemm_, cfloat, Routine::Cgemm, "cgemm_")
SCILIB_GEMM_EXPORT(zgemm_, cdouble, Routine::Zgemm, "zgemm_")
SCILIB_GEMM_EXPORT(sgemm, float, Routine::Sgemm, "sgemm_")
SCILIB_GEMM_EXPORT(dgemm, double, Routine::Dgemm, "dgemm_")
SCILIB_GEMM_EXPORT(cgemm, cfloat, Routine::Cgemm, "cgemm_")
SCILIB_GEMM_EXPORT(zgemm, cdouble, Routine::Zgemm, "zgemm_")

extern "C" SCILIB_SHIM_EXPORT void scilib_shim_flush(void) {
  if (Interceptor* icpt = state().interceptor) icpt->flush();
}
