#pragma once

// Fits HardwareProfile rates from observed timings. Each measurement class
// maps to one profile field through time = work / rate; with several
// measurements of a class the rate is the least-squares fit of that line
// through the origin.
//
// Measurement document:
//   {"name": "...", "measurements": [
//     {"class": "cpu_gemm", "routine": "dgemm", "m": 32, "n": 2400, "k": 93536,
//      "time_ms": 19.7},
//     {"class": "link_copy", "routine": "dgemm", "ta": "T", "tb": "N",
//      "m": 32, "n": 2400, "k": 93536, "time_ms": 31.79},
//     {"class": "stream", "processor": "CPU", "memory": "HostMem",
//      "kernel": "Copy", "gbs": 312.71}, ...]}
//
// gemm classes take "flops" or dims; copy classes take "bytes" or dims (the
// copy-per-call byte count of that call); times are "time_s" or "time_ms".

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "costmodel.hpp"

namespace scilib {

enum class MeasurementClass {
  CpuGemm,            // -> cpu_gemm_rate
  CpuGemmDeviceMem,   // -> cpu_rate_on_device_mem
  GpuGemmHbm,         // -> gpu_gemm_rate_hbm
  GpuGemmHbmHostAlloc,// -> gpu_gemm_rate_hbm_hostalloc
  GpuGemmHostMem,     // -> gpu_gemm_rate_hostmem
  LinkCopy,           // -> link_bandwidth
  Migration,          // -> migration_bandwidth (defaults to link)
  Overhead,           // -> per_call_overhead (defaults to 0)
  Stream,             // -> stream_table entry
};

std::string_view measurement_class_name(MeasurementClass c);

// Classes that must be measured when no base profile is given.
std::vector<MeasurementClass> required_measurement_classes();

// Without a base every required class must be present; with one, measured
// classes override the base. Throws Error(Underdetermined) listing missing
// classes (or when there are no measurements at all) and
// Error(InvalidArgument) for malformed entries.
HardwareProfile calibrate(const nlohmann::json& doc,
                          const std::optional<HardwareProfile>& base);

// Reads and parses the file; an empty file is Underdetermined.
HardwareProfile calibrate_file(const std::string& path,
                               const std::optional<HardwareProfile>& base);

}  // namespace scilib
