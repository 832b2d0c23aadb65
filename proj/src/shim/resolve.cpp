#include "resolve.hpp"

#include <dlfcn.h>

#include <mutex>
#include <string>
#include <unordered_map>

#include "../core/error.hpp"

namespace scilib::shim {

namespace {

std::mutex& cache_mutex() {
  static std::mutex mu;
  return mu;
}

std::unordered_map<std::string, void*>& cache() {
  static auto* table = new std::unordered_map<std::string, void*>();
  return *table;
}

}  // namespace

void* resolve_next(const char* symbol) {
  std::lock_guard lock(cache_mutex());
  auto& table = cache();
  if (auto it = table.find(symbol); it != table.end()) return it->second;

  dlerror();
  void* addr = dlsym(RTLD_NEXT, symbol);
  if (addr == nullptr)
    throw Error(ErrorCode::SymbolNotFound,
                std::string("cannot resolve next definition of '") + symbol + "'");
  table.emplace(symbol, addr);
  return addr;
}

void* resolve_next_any(const char* primary, const char* alternate) {
  try {
    return resolve_next(primary);
  } catch (const Error&) {
    try {
      return resolve_next(alternate);
    } catch (const Error&) {
      throw Error(ErrorCode::SymbolNotFound,
                  std::string("cannot resolve next definition of '") + primary + "'");
    }
  }
}

std::size_t resolve_cache_size() {
  std::lock_guard lock(cache_mutex());
  return cache().size();
}

}  // namespace scilib::shim
