#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "model.hpp"

namespace scilib {

class RoutineSet {
 public:
  static RoutineSet all();
  static RoutineSet none() { return RoutineSet(); }

  void insert(Routine r) { bits_ |= bit(r); }
  bool contains(Routine r) const { return (bits_ & bit(r)) != 0; }
  bool is_all() const { return bits_ == all().bits_; }
  bool empty() const { return bits_ == 0; }

  friend bool operator==(const RoutineSet&, const RoutineSet&) = default;

 private:
  static std::uint8_t bit(Routine r) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(r));
  }
  std::uint8_t bits_ = 0;
};

inline constexpr std::uint64_t kDefaultDeviceCapacity = 96ull << 30;  // 96 GiB HBM

struct OffloadConfig {
  Strategy strategy = Strategy::first_touch_migrate();
  double threshold = 500.0;
  RoutineSet enabled_routines = RoutineSet::all();
  int debug_level = 0;
  std::uint64_t page_size = 4096;
  std::uint64_t device_capacity = kDefaultDeviceCapacity;
  std::optional<std::string> trace_path;
  std::optional<std::string> stats_path;

  // Throws Error(ConfigParse) when an invariant does not hold.
  void validate() const;

  friend bool operator==(const OffloadConfig&, const OffloadConfig&) = default;
};

using EnvMap = std::map<std::string, std::string>;

namespace env {
inline constexpr const char* kStrategy = "SCILIB_STRATEGY";
inline constexpr const char* kThreshold = "SCILIB_THRESHOLD";
inline constexpr const char* kRoutines = "SCILIB_ROUTINES";
inline constexpr const char* kDebug = "SCILIB_DEBUG";
inline constexpr const char* kPageSize = "SCILIB_PAGE_SIZE";
inline constexpr const char* kDeviceCapacity = "SCILIB_DEVICE_CAPACITY";
inline constexpr const char* kTrace = "SCILIB_TRACE";
inline constexpr const char* kStats = "SCILIB_STATS";
}  // namespace env

// (m*n*k)^(1/3).
double effective_size(std::uint64_t m, std::uint64_t n, std::uint64_t k);

// Offload iff the routine is enabled and effective_size > threshold
// (strict). The size test is evaluated as m*n*k > threshold^3 in extended
// precision so that perfect cubes on the boundary resolve exactly.
Decision should_offload(const GemmCall& call, const OffloadConfig& cfg);
Decision should_offload(Routine routine, std::uint64_t m, std::uint64_t n,
                        std::uint64_t k, const OffloadConfig& cfg);

// Unset variables keep their defaults. Throws Error(ConfigParse) naming the
// offending variable.
OffloadConfig parse_config(const EnvMap& env);

// Applies a single variable on top of an existing config.
void apply_config_var(OffloadConfig& cfg, const std::string& name,
                      const std::string& value);

// Reads the SCILIB_* variables from the process environment.
OffloadConfig config_from_environ();

// Inverse of parse_config: parse_config(to_env(c)) == c.
EnvMap to_env(const OffloadConfig& cfg);

}  // namespace scilib
