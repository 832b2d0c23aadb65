#include "costmodel.hpp"

#include <array>
#include <cmath>

namespace scilib {

namespace {

// Reference workload: dgemm('T', 'N', 32, 2400, 93536). The GH200 rates are
// that call's flops divided by its measured time under each placement.
constexpr double kRefFlops = 2.0 * 32 * 2400 * 93536;
// A + B + 2C of the reference call, tight leading dimensions.
constexpr double kRefCopyBytes = 1821065216.0;

constexpr double kGh200CpuLpddrSeconds = 19.7e-3;
constexpr double kGh200GpuLpddrSeconds = 19.7e-3;
constexpr double kGh200CpuHbmSeconds = 24.9e-3;
constexpr double kGh200GpuHbmHostAllocSeconds = 0.84e-3;
constexpr double kGh200GpuCudaMallocSeconds = 0.52e-3;
constexpr double kH100PcieGpuSeconds = 0.99e-3;
constexpr double kOtherSeconds = 0.02e-3;

constexpr double kC2cBandwidth = 370e9;
constexpr double kPcieBandwidth = 64e9;

void set_stream(StreamTable& t, Processor p, MemoryKind m,
                std::array<double, 4> gbs) {
  t[{p, m, StreamKernel::Copy}] = gbs[0];
  t[{p, m, StreamKernel::Scale}] = gbs[1];
  t[{p, m, StreamKernel::Add}] = gbs[2];
  t[{p, m, StreamKernel::Triad}] = gbs[3];
}

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw Error(ErrorCode::InvalidArgument,
                std::string("profile field '") + field + "' must be positive");
}

}  // namespace

void HardwareProfile::validate() const {
  require_positive(cpu_gemm_rate, "cpu_gemm_rate");
  require_positive(gpu_gemm_rate_hbm, "gpu_gemm_rate_hbm");
  require_positive(gpu_gemm_rate_hbm_hostalloc, "gpu_gemm_rate_hbm_hostalloc");
  require_positive(gpu_gemm_rate_hostmem, "gpu_gemm_rate_hostmem");
  require_positive(cpu_rate_on_device_mem, "cpu_rate_on_device_mem");
  require_positive(link_bandwidth, "link_bandwidth");
  require_positive(migration_bandwidth, "migration_bandwidth");
  if (!(per_call_overhead >= 0.0) || !std::isfinite(per_call_overhead))
    throw Error(ErrorCode::InvalidArgument,
                "profile field 'per_call_overhead' must be >= 0");
  for (const auto& [key, gbs] : stream_table) require_positive(gbs, "stream_table");
}

HardwareProfile gh200_profile() {
  HardwareProfile p;
  p.name = "gh200";
  p.cpu_gemm_rate = kRefFlops / kGh200CpuLpddrSeconds;
  p.gpu_gemm_rate_hbm = kRefFlops / kGh200GpuCudaMallocSeconds;
  p.gpu_gemm_rate_hbm_hostalloc = kRefFlops / kGh200GpuHbmHostAllocSeconds;
  p.gpu_gemm_rate_hostmem = kRefFlops / kGh200GpuLpddrSeconds;
  p.cpu_rate_on_device_mem = kRefFlops / kGh200CpuHbmSeconds;
  p.link_bandwidth = kC2cBandwidth;
  p.migration_bandwidth = kC2cBandwidth;
  p.per_call_overhead = kOtherSeconds;
  // STREAM, 72 Grace cores and H100, GB/s.
  set_stream(p.stream_table, Processor::CPU, MemoryKind::HostMem,
             {312.71, 305.65, 314.47, 314.59});
  set_stream(p.stream_table, Processor::CPU, MemoryKind::DeviceMem,
             {129.61, 130.62, 125.93, 125.94});
  set_stream(p.stream_table, Processor::GPU, MemoryKind::HostMem,
             {318.26, 318.37, 477.91, 477.24});
  set_stream(p.stream_table, Processor::GPU, MemoryKind::DeviceMem,
             {3421.95, 3417.83, 3741.64, 3739.18});
  return p;
}

HardwareProfile h100_pcie_profile() {
  HardwareProfile p;
  p.name = "h100_pcie";
  // No host gemm timing exists for this machine; the Grace rate stands in.
  p.cpu_gemm_rate = kRefFlops / kGh200CpuLpddrSeconds;
  p.gpu_gemm_rate_hbm = kRefFlops / kH100PcieGpuSeconds;
  // No coherent host-allocated HBM on a PCIe card.
  p.gpu_gemm_rate_hbm_hostalloc = p.gpu_gemm_rate_hbm;
  // Cross-link access streams the operands over PCIe once per call.
  p.gpu_gemm_rate_hostmem = kRefFlops / (kRefCopyBytes / kPcieBandwidth);
  p.cpu_rate_on_device_mem = p.gpu_gemm_rate_hostmem;
  p.link_bandwidth = kPcieBandwidth;
  p.migration_bandwidth = kPcieBandwidth;
  p.per_call_overhead = kOtherSeconds;
  return p;
}

std::vector<std::string> builtin_profile_names() { return {"gh200", "h100_pcie"}; }

HardwareProfile builtin_profile(const std::string& name) {
  if (name == "gh200") return gh200_profile();
  if (name == "h100_pcie") return h100_pcie_profile();
  throw Error(ErrorCode::UnknownProfile, "unknown profile '" + name + "'");
}

std::string_view processor_name(Processor p) { return p == Processor::CPU ? "CPU" : "GPU"; }

std::string_view memory_kind_name(MemoryKind m) {
  return m == MemoryKind::HostMem ? "HostMem" : "DeviceMem";
}

std::string_view stream_kernel_name(StreamKernel k) {
  switch (k) {
    case StreamKernel::Copy: return "Copy";
    case StreamKernel::Scale: return "Scale";
    case StreamKernel::Add: return "Add";
    case StreamKernel::Triad: return "Triad";
  }
  return "?";
}

Processor processor_from_name(std::string_view s) {
  if (s == "CPU") return Processor::CPU;
  if (s == "GPU") return Processor::GPU;
  throw Error(ErrorCode::InvalidArgument, "unknown processor '" + std::string(s) + "'");
}

MemoryKind memory_kind_from_name(std::string_view s) {
  if (s == "HostMem") return MemoryKind::HostMem;
  if (s == "DeviceMem") return MemoryKind::DeviceMem;
  throw Error(ErrorCode::InvalidArgument, "unknown memory kind '" + std::string(s) + "'");
}

StreamKernel stream_kernel_from_name(std::string_view s) {
  if (s == "Copy") return StreamKernel::Copy;
  if (s == "Scale" || s == "Mul") return StreamKernel::Scale;
  if (s == "Add") return StreamKernel::Add;
  if (s == "Triad") return StreamKernel::Triad;
  throw Error(ErrorCode::InvalidArgument, "unknown STREAM kernel '" + std::string(s) + "'");
}

nlohmann::json profile_to_json(const HardwareProfile& p) {
  nlohmann::json j;
  j["name"] = p.name;
  j["cpu_gemm_rate"] = p.cpu_gemm_rate;
  j["gpu_gemm_rate_hbm"] = p.gpu_gemm_rate_hbm;
  j["gpu_gemm_rate_hbm_hostalloc"] = p.gpu_gemm_rate_hbm_hostalloc;
  j["gpu_gemm_rate_hostmem"] = p.gpu_gemm_rate_hostmem;
  j["cpu_rate_on_device_mem"] = p.cpu_rate_on_device_mem;
  j["link_bandwidth"] = p.link_bandwidth;
  j["migration_bandwidth"] = p.migration_bandwidth;
  j["per_call_overhead"] = p.per_call_overhead;
  nlohmann::json stream = nlohmann::json::object();
  for (const auto& [key, gbs] : p.stream_table) {
    const auto& [proc, mem, kernel] = key;
    stream[std::string(processor_name(proc))][std::string(memory_kind_name(mem))]
          [std::string(stream_kernel_name(kernel))] = gbs;
  }
  j["stream_table"] = std::move(stream);
  return j;
}

HardwareProfile profile_from_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw Error(ErrorCode::InvalidArgument, "profile must be a JSON object");
  auto number = [&](const char* field) {
    if (!j.contains(field) || !j[field].is_number())
      throw Error(ErrorCode::InvalidArgument,
                  std::string("profile is missing numeric field '") + field + "'");
    return j[field].get<double>();
  };

  HardwareProfile p;
  p.name = j.value("name", std::string("custom"));
  p.cpu_gemm_rate = number("cpu_gemm_rate");
  p.gpu_gemm_rate_hbm = number("gpu_gemm_rate_hbm");
  p.gpu_gemm_rate_hbm_hostalloc = j.contains("gpu_gemm_rate_hbm_hostalloc")
                                      ? number("gpu_gemm_rate_hbm_hostalloc")
                                      : p.gpu_gemm_rate_hbm;
  p.gpu_gemm_rate_hostmem = number("gpu_gemm_rate_hostmem");
  p.cpu_rate_on_device_mem = number("cpu_rate_on_device_mem");
  p.link_bandwidth = number("link_bandwidth");
  p.migration_bandwidth =
      j.contains("migration_bandwidth") ? number("migration_bandwidth") : p.link_bandwidth;
  p.per_call_overhead = j.contains("per_call_overhead") ? number("per_call_overhead") : 0.0;

  if (j.contains("stream_table")) {
    const auto& st = j["stream_table"];
    if (!st.is_object())
      throw Error(ErrorCode::InvalidArgument, "stream_table must be an object");
    for (const auto& [proc, mems] : st.items()) {
      for (const auto& [mem, kernels] : mems.items()) {
        for (const auto& [kernel, gbs] : kernels.items()) {
          if (!gbs.is_number())
            throw Error(ErrorCode::InvalidArgument, "stream_table entries must be numbers");
          p.stream_table[{processor_from_name(proc), memory_kind_from_name(mem),
                          stream_kernel_from_name(kernel)}] = gbs.get<double>();
        }
      }
    }
  }
  p.validate();
  return p;
}

std::string_view execution_path_name(ExecutionPath p) {
  switch (p) {
    case ExecutionPath::Host: return "host";
    case ExecutionPath::Copy: return "copy";
    case ExecutionPath::Unified: return "unified";
    case ExecutionPath::Migrated: return "migrated";
    case ExecutionPath::CopyFallback: return "copy_fallback";
  }
  return "?";
}

std::uint64_t strategy1_bytes(const GemmCall& call) {
  return region_bytes(call.a()) + region_bytes(call.b()) + 2 * region_bytes(call.c());
}

std::uint64_t device_working_set(const GemmCall& call) {
  return region_bytes(call.a()) + region_bytes(call.b()) + region_bytes(call.c());
}

namespace {

CostBreakdown host_cost(double flops, double rate) {
  CostBreakdown c;
  c.kernel_s = flops / rate;
  c.executed_on = Processor::CPU;
  c.path = ExecutionPath::Host;
  return c;
}

CostBreakdown copy_cost(const GemmCall& call, double flops,
                        const HardwareProfile& profile) {
  CostBreakdown c;
  c.bytes_moved = strategy1_bytes(call);
  c.transfer_s = static_cast<double>(c.bytes_moved) / profile.link_bandwidth;
  c.kernel_s = flops / profile.gpu_gemm_rate_hbm;
  c.other_s = profile.per_call_overhead;
  c.executed_on = Processor::GPU;
  c.path = ExecutionPath::Copy;
  return c;
}

}  // namespace

CostBreakdown cost(const GemmCall& call, const Strategy& strategy,
                   const HardwareProfile& profile, ResidencyRegistry* registry,
                   const Decision& decision) {
  const double flops = flop_count(call);

  if (!decision.offloaded()) {
    const bool on_hbm = strategy.kind() == Strategy::Kind::UnifiedAccess &&
                        strategy.residence() == Residence::DeviceMemory;
    return host_cost(flops, on_hbm ? profile.cpu_rate_on_device_mem
                                   : profile.cpu_gemm_rate);
  }

  switch (strategy.kind()) {
    case Strategy::Kind::CopyPerCall:
      return copy_cost(call, flops, profile);

    case Strategy::Kind::UnifiedAccess: {
      CostBreakdown c;
      c.kernel_s = flops / (strategy.residence() == Residence::HostMemory
                                ? profile.gpu_gemm_rate_hostmem
                                : profile.gpu_gemm_rate_hbm_hostalloc);
      c.other_s = profile.per_call_overhead;
      c.executed_on = Processor::GPU;
      c.path = ExecutionPath::Unified;
      return c;
    }

    case Strategy::Kind::FirstTouchMigrate: {
      if (registry == nullptr)
        throw Error(ErrorCode::InvalidArgument,
                    "first-touch migration needs a residency registry");
      const MigrationAction action = registry->touch_all(call.operands);
      if (action.kind == MigrationAction::Kind::Denied) {
        const std::uint64_t free_bytes =
            registry->capacity() - registry->resident_bytes();
        if (device_working_set(call) <= free_bytes) {
          CostBreakdown c = copy_cost(call, flops, profile);
          c.path = ExecutionPath::CopyFallback;
          return c;
        }
        return host_cost(flops, profile.cpu_gemm_rate);
      }
      CostBreakdown c;
      c.bytes_moved = action.bytes;
      c.migration_s = static_cast<double>(action.bytes) / profile.migration_bandwidth;
      // Migrated pages are host allocations now living in HBM.
      c.kernel_s = flops / profile.gpu_gemm_rate_hbm_hostalloc;
      c.other_s = profile.per_call_overhead;
      c.executed_on = Processor::GPU;
      c.path = ExecutionPath::Migrated;
      return c;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown strategy");
}

}  // namespace scilib
