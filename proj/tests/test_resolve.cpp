#include <doctest.h>

#include <dlfcn.h>

#include <string>

#include "core/error.hpp"
#include "shim/resolve.hpp"

extern "C" void dgemm_();

TEST_CASE("resolves the BLAS gemm linked after this executable") {
  // Keeps the BLAS in the link map.
  volatile auto keep = &dgemm_;
  (void)keep;
  void* first = scilib::shim::resolve_next("dgemm_");
  REQUIRE(first != nullptr);
  CHECK(first == dlsym(RTLD_DEFAULT, "dgemm_"));
  const std::size_t cached = scilib::shim::resolve_cache_size();
  CHECK(scilib::shim::resolve_next("dgemm_") == first);
  CHECK(scilib::shim::resolve_cache_size() == cached);
  CHECK(scilib::shim::resolve_next_any("sgemm_", "sgemm") != nullptr);
}

TEST_CASE("unknown symbols report their name") {
  try {
    scilib::shim::resolve_next("no_such_gemm_");
    FAIL("expected SymbolNotFound");
  } catch (const scilib::Error& e) {
    CHECK(e.code() == scilib::ErrorCode::SymbolNotFound);
    CHECK(std::string(e.what()).find("no_such_gemm_") != std::string::npos);
  }
  try {
    scilib::shim::resolve_next_any("nope_a_", "nope_b");
    FAIL("expected SymbolNotFound");
  } catch (const scilib::Error& e) {
    CHECK(std::string(e.what()).find("nope_a_") != std::string::npos);
  }
}
