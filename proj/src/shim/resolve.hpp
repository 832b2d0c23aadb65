#pragma once

#include <cstddef>

namespace scilib::shim {

// Address of the next definition of `symbol` after the calling object in the
// loader's search order (dlsym(RTLD_NEXT)). Results are cached per name, so
// repeated lookups return the identical address. Throws
// Error(SymbolNotFound) naming the symbol.
//
// Must be compiled into the object that wants to skip itself: RTLD_NEXT is
// relative to the caller's load module.
void* resolve_next(const char* symbol);

// First hit among several spellings, e.g. {"dgemm_", "dgemm"}.
void* resolve_next_any(const char* primary, const char* alternate);

// Number of distinct names that have been looked up successfully.
std::size_t resolve_cache_size();

}  // namespace scilib::shim
