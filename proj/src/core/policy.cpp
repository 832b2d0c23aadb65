#include "policy.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string_view>

namespace scilib {

namespace {

[[noreturn]] void config_error(const std::string& var, const std::string& why) {
  throw Error(ErrorCode::ConfigParse, var + ": " + why);
}

double parse_real(const std::string& var, const std::string& text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty())
    config_error(var, "malformed number '" + text + "'");
  if (!std::isfinite(value)) config_error(var, "value must be finite");
  return value;
}

std::uint64_t parse_unsigned(const std::string& var, const std::string& text) {
  std::uint64_t value = 0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty())
    config_error(var, "malformed unsigned integer '" + text + "'");
  return value;
}

RoutineSet parse_routines(const std::string& text) {
  if (text == "all" || text == "ALL") return RoutineSet::all();
  RoutineSet set;
  if (text == "none" || text == "NONE") return set;
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    std::string_view item = rest.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (item.empty()) config_error(env::kRoutines, "empty routine name in '" + text + "'");
    try {
      set.insert(routine_from_name(item));
    } catch (const Error& e) {
      config_error(env::kRoutines, e.what());
    }
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return set;
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

RoutineSet RoutineSet::all() {
  RoutineSet s;
  for (Routine r : kAllRoutines) s.insert(r);
  return s;
}

void OffloadConfig::validate() const {
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    config_error(env::kThreshold, "threshold must be a positive finite number");
  if (debug_level < 0 || debug_level > 3)
    config_error(env::kDebug, "debug level must be in 0..3");
  if (!is_power_of_two(page_size))
    config_error(env::kPageSize, "page size must be a power of two");
  if (device_capacity == 0)
    config_error(env::kDeviceCapacity, "device capacity must be positive");
}

double effective_size(std::uint64_t m, std::uint64_t n, std::uint64_t k) {
  const long double product = static_cast<long double>(m) *
                              static_cast<long double>(n) *
                              static_cast<long double>(k);
  return static_cast<double>(std::cbrt(product));
}

namespace {

bool exceeds_threshold(std::uint64_t m, std::uint64_t n, std::uint64_t k,
                       double threshold) {
  using u128 = unsigned __int128;
  constexpr std::uint64_t kExactDim = 1ull << 42;
  constexpr double kExactThreshold = 1099511627776.0;  // 2^40
  const bool integral = std::floor(threshold) == threshold;
  if (m < kExactDim && n < kExactDim && k < kExactDim && integral &&
      threshold <= kExactThreshold) {
    const u128 product = static_cast<u128>(m) * n * k;
    const auto t = static_cast<u128>(threshold);
    return product > t * t * t;
  }
  const long double product = static_cast<long double>(m) *
                              static_cast<long double>(n) *
                              static_cast<long double>(k);
  const long double t = threshold;
  return product > t * t * t;
}

}  // namespace

Decision should_offload(Routine routine, std::uint64_t m, std::uint64_t n,
                        std::uint64_t k, const OffloadConfig& cfg) {
  if (!cfg.enabled_routines.contains(routine))
    return Decision::host(Reason::RoutineDisabled);
  if (!exceeds_threshold(m, n, k, cfg.threshold))
    return Decision::host(Reason::BelowThreshold);
  return Decision::offload();
}

Decision should_offload(const GemmCall& call, const OffloadConfig& cfg) {
  return should_offload(call.routine, call.m, call.n, call.k, cfg);
}

void apply_config_var(OffloadConfig& cfg, const std::string& name,
                      const std::string& value) {
  if (name == env::kStrategy) {
    auto s = Strategy::from_code(value);
    if (!s) config_error(name, "unknown strategy code '" + value + "' (expected 1, 2H, 2L, 2D or 3)");
    cfg.strategy = *s;
  } else if (name == env::kThreshold) {
    cfg.threshold = parse_real(name, value);
    if (!(cfg.threshold > 0.0)) config_error(name, "threshold must be positive");
  } else if (name == env::kRoutines) {
    cfg.enabled_routines = parse_routines(value);
  } else if (name == env::kDebug) {
    const auto level = parse_unsigned(name, value);
    if (level > 3) config_error(name, "debug level must be in 0..3");
    cfg.debug_level = static_cast<int>(level);
  } else if (name == env::kPageSize) {
    cfg.page_size = parse_unsigned(name, value);
    if (!is_power_of_two(cfg.page_size)) config_error(name, "page size must be a power of two");
  } else if (name == env::kDeviceCapacity) {
    cfg.device_capacity = parse_unsigned(name, value);
    if (cfg.device_capacity == 0) config_error(name, "device capacity must be positive");
  } else if (name == env::kTrace) {
    cfg.trace_path = value.empty() ? std::nullopt : std::optional<std::string>(value);
  } else if (name == env::kStats) {
    cfg.stats_path = value.empty() ? std::nullopt : std::optional<std::string>(value);
  } else {
    config_error(name, "unknown configuration variable");
  }
}

OffloadConfig parse_config(const EnvMap& vars) {
  OffloadConfig cfg;
  for (const auto& [name, value] : vars) apply_config_var(cfg, name, value);
  cfg.validate();
  return cfg;
}

OffloadConfig config_from_environ() {
  EnvMap vars;
  for (const char* name : {env::kStrategy, env::kThreshold, env::kRoutines,
                           env::kDebug, env::kPageSize, env::kDeviceCapacity,
                           env::kTrace, env::kStats}) {
    if (const char* value = std::getenv(name)) vars.emplace(name, value);
  }
  return parse_config(vars);
}

EnvMap to_env(const OffloadConfig& cfg) {
  EnvMap out;
  out[env::kStrategy] = std::string(cfg.strategy.code());
  out[env::kThreshold] = format_real(cfg.threshold);
  if (cfg.enabled_routines.is_all()) {
    out[env::kRoutines] = "all";
  } else if (cfg.enabled_routines.empty()) {
    out[env::kRoutines] = "none";
  } else {
    std::string list;
    for (Routine r : kAllRoutines) {
      if (!cfg.enabled_routines.contains(r)) continue;
      if (!list.empty()) list += ',';
      list += routine_name(r);
    }
    out[env::kRoutines] = list;
  }
  out[env::kDebug] = std::to_string(cfg.debug_level);
  out[env::kPageSize] = std::to_string(cfg.page_size);
  out[env::kDeviceCapacity] = std::to_string(cfg.device_capacity);
  if (cfg.trace_path) out[env::kTrace] = *cfg.trace_path;
  if (cfg.stats_path) out[env::kStats] = *cfg.stats_path;
  return out;
}

}  // namespace scilib
