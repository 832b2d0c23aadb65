#pragma once

// Analytic cost model of one CPU-GPU machine. Every rate is a
// workload-independent constant; a call's cost under a strategy is the sum
// of transfer, kernel, migration and fixed per-call time, with no overlap.

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "model.hpp"
#include "residency.hpp"

namespace scilib {

enum class Processor : std::uint8_t { CPU, GPU };
enum class MemoryKind : std::uint8_t { HostMem, DeviceMem };
// Scale is the STREAM "Mul" kernel on the CPU side.
enum class StreamKernel : std::uint8_t { Copy, Scale, Add, Triad };

using StreamKey = std::tuple<Processor, MemoryKind, StreamKernel>;
using StreamTable = std::map<StreamKey, double>;  // GB/s

struct HardwareProfile {
  std::string name;
  double cpu_gemm_rate = 0;                // flop/s, CPU on host memory
  double gpu_gemm_rate_hbm = 0;            // flop/s, GPU on device-allocated memory
  double gpu_gemm_rate_hbm_hostalloc = 0;  // flop/s, GPU on host-allocated pages in HBM
  double gpu_gemm_rate_hostmem = 0;        // flop/s, GPU reading host memory
  double cpu_rate_on_device_mem = 0;       // flop/s, CPU reading HBM
  double link_bandwidth = 0;               // bytes/s, explicit host<->device copies
  double migration_bandwidth = 0;          // bytes/s, page migration
  double per_call_overhead = 0;            // seconds per offloaded call
  StreamTable stream_table;

  // Throws Error(InvalidArgument) on a non-positive rate or negative overhead.
  void validate() const;
};

HardwareProfile gh200_profile();
HardwareProfile h100_pcie_profile();
std::vector<std::string> builtin_profile_names();
// Throws Error(UnknownProfile).
HardwareProfile builtin_profile(const std::string& name);

nlohmann::json profile_to_json(const HardwareProfile& p);
// Throws Error(InvalidArgument) naming the missing or malformed field.
HardwareProfile profile_from_json(const nlohmann::json& j);

std::string_view processor_name(Processor p);
std::string_view memory_kind_name(MemoryKind m);
std::string_view stream_kernel_name(StreamKernel k);
Processor processor_from_name(std::string_view s);
MemoryKind memory_kind_from_name(std::string_view s);
StreamKernel stream_kernel_from_name(std::string_view s);

enum class ExecutionPath : std::uint8_t {
  Host,          // CPU BLAS
  Copy,          // copy in, kernel, copy C back
  Unified,       // kernel directly on shared pointers
  Migrated,      // first-touch migration, then kernel
  CopyFallback,  // migration denied for capacity, copied instead
};

std::string_view execution_path_name(ExecutionPath p);

struct CostBreakdown {
  double transfer_s = 0;
  double kernel_s = 0;
  double migration_s = 0;
  double other_s = 0;
  std::uint64_t bytes_moved = 0;
  Processor executed_on = Processor::CPU;
  ExecutionPath path = ExecutionPath::Host;

  double total() const { return transfer_s + kernel_s + migration_s + other_s; }
};

// A + B + 2C: inputs in, C back out.
std::uint64_t strategy1_bytes(const GemmCall& call);

// A + B + C: device footprint of one call when copied.
std::uint64_t device_working_set(const GemmCall& call);

// Cost of `call` under `strategy`. The registry is only consulted (and
// updated) for FirstTouchMigrate, where it must be non-null. A migration
// that the registry denies falls back to copy semantics when the working set
// fits beside the resident pages, otherwise to host execution.
CostBreakdown cost(const GemmCall& call, const Strategy& strategy,
                   const HardwareProfile& profile, ResidencyRegistry* registry,
                   const Decision& decision);

}  // namespace scilib
