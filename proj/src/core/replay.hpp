#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "costmodel.hpp"
#include "policy.hpp"
#include "residency.hpp"
#include "trace.hpp"

namespace scilib {

struct CallRecord {
  std::uint64_t seq = 0;
  Decision decision = Decision::offload();
  CostBreakdown cost;
};

struct ReplayTotals {
  double wall_s = 0;
  double kernel_s = 0;
  double transfer_s = 0;
  double migration_s = 0;
  double other_s = 0;
  std::uint64_t bytes_moved = 0;
  std::uint64_t calls_offloaded = 0;
  std::uint64_t calls_host = 0;

  // Kernel plus data movement, the "gemm+data" figure.
  double compute_plus_data_s() const { return kernel_s + transfer_s + migration_s; }
};

struct ReplayReport {
  std::string strategy_code;
  std::string profile_name;
  double threshold = 0;
  std::uint64_t page_size = 0;
  std::vector<CallRecord> per_call;
  ReplayTotals totals;
  ReuseStats reuse;
};

// Replays the trace in order against a fresh residency registry. Calls whose
// device footprint cannot be placed run on the host with reason
// CapacityExceeded.
ReplayReport replay(const Trace& trace, const Strategy& strategy,
                    const HardwareProfile& profile, const OffloadConfig& cfg);

struct Comparison {
  std::vector<ReplayReport> reports;
  std::vector<double> speedups;  // first report's wall time / this wall time
};

// Throws Error(InvalidArgument) for an empty strategy list.
Comparison compare(const Trace& trace, std::span<const Strategy> strategies,
                   const HardwareProfile& profile, const OffloadConfig& cfg);

struct SyntheticSpec {
  std::uint64_t n_matrices = 1;
  std::uint64_t reuse_factor = 1;
  std::uint64_t m = 1, n = 1, k = 1;
  std::uint32_t elem_size = 8;
  Trans trans_a = Trans::T;
  Trans trans_b = Trans::N;
  std::uint64_t seed = 0;
  std::uint64_t page_size = 4096;
  std::optional<Routine> routine;  // defaults from elem_size
};

inline constexpr std::uint64_t kSyntheticBaseAddress = 0x100000000ull;
inline constexpr std::uint64_t kSyntheticAddressBudget = 1ull << 47;
inline constexpr std::uint64_t kMaxSyntheticCalls = 1ull << 28;

// n_matrices operand sets (A, B, C each page-aligned and disjoint), each
// used reuse_factor times, in a seed-determined interleaving. Throws
// Error(SpecError) on invalid parameters or when the operands do not fit
// the address budget.
Trace gen_synthetic(const SyntheticSpec& spec);

nlohmann::json report_to_json(const ReplayReport& report);
nlohmann::json comparison_to_json(const Comparison& cmp);
std::string comparison_to_text(const Comparison& cmp);
std::string report_summary(const ReplayReport& report);

nlohmann::json reuse_stats_to_json(const ReuseStats& stats);

}  // namespace scilib
