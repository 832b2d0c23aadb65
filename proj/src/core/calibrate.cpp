#include "calibrate.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace scilib {

namespace {

using nlohmann::json;

constexpr std::array<std::pair<MeasurementClass, const char*>, 9> kClassNames = {{
    {MeasurementClass::CpuGemm, "cpu_gemm"},
    {MeasurementClass::CpuGemmDeviceMem, "cpu_gemm_devmem"},
    {MeasurementClass::GpuGemmHbm, "gpu_gemm_hbm"},
    {MeasurementClass::GpuGemmHbmHostAlloc, "gpu_gemm_hbm_hostalloc"},
    {MeasurementClass::GpuGemmHostMem, "gpu_gemm_hostmem"},
    {MeasurementClass::LinkCopy, "link_copy"},
    {MeasurementClass::Migration, "migration"},
    {MeasurementClass::Overhead, "overhead"},
    {MeasurementClass::Stream, "stream"},
}};

[[noreturn]] void bad_entry(std::size_t index, const std::string& why) {
  throw Error(ErrorCode::InvalidArgument,
              "measurement " + std::to_string(index) + ": " + why);
}

MeasurementClass class_from_name(const std::string& s, std::size_t index) {
  for (const auto& [cls, name] : kClassNames)
    if (s == name) return cls;
  bad_entry(index, "unknown class '" + s + "'");
}

bool is_gemm_class(MeasurementClass c) {
  return c == MeasurementClass::CpuGemm || c == MeasurementClass::CpuGemmDeviceMem ||
         c == MeasurementClass::GpuGemmHbm || c == MeasurementClass::GpuGemmHbmHostAlloc ||
         c == MeasurementClass::GpuGemmHostMem;
}

double positive_number(const json& m, const char* field, std::size_t index) {
  if (!m[field].is_number()) bad_entry(index, std::string("'") + field + "' must be a number");
  const double v = m[field].get<double>();
  if (!(v > 0.0) || !std::isfinite(v)) bad_entry(index, std::string("'") + field + "' must be positive");
  return v;
}

double time_seconds(const json& m, std::size_t index) {
  if (m.contains("time_s")) return positive_number(m, "time_s", index);
  if (m.contains("time_ms")) return positive_number(m, "time_ms", index) * 1e-3;
  bad_entry(index, "missing 'time_s' or 'time_ms'");
}

GemmCall call_from_dims(const json& m, std::size_t index) {
  try {
    GemmArgs args;
    args.routine = routine_from_name(m.value("routine", std::string("dgemm")));
    args.trans_a = trans_from_char(m.value("ta", std::string("N")).at(0));
    args.trans_b = trans_from_char(m.value("tb", std::string("N")).at(0));
    args.m = m.at("m").get<std::uint64_t>();
    args.n = m.at("n").get<std::uint64_t>();
    args.k = m.at("k").get<std::uint64_t>();
    const bool a_plain = args.trans_a == Trans::N;
    const bool b_plain = args.trans_b == Trans::N;
    args.lda = m.value("lda", a_plain ? args.m : args.k);
    args.ldb = m.value("ldb", b_plain ? args.k : args.n);
    args.ldc = m.value("ldc", args.m);
    return make_gemm_call(args);
  } catch (const Error& e) {
    bad_entry(index, e.what());
  } catch (const json::exception& e) {
    bad_entry(index, std::string("bad workload dims: ") + e.what());
  }
}

double gemm_work(const json& m, std::size_t index) {
  if (m.contains("flops")) return positive_number(m, "flops", index);
  return flop_count(call_from_dims(m, index));
}

double copy_work(const json& m, std::size_t index) {
  if (m.contains("bytes")) return positive_number(m, "bytes", index);
  return static_cast<double>(strategy1_bytes(call_from_dims(m, index)));
}

// time_i = work_i * x with x = 1 / rate; least squares gives
// x = sum(w t) / sum(w^2).
struct RateFit {
  double sum_wt = 0;
  double sum_ww = 0;
  void add(double work, double seconds) {
    sum_wt += work * seconds;
    sum_ww += work * work;
  }
  double rate() const { return sum_ww / sum_wt; }
};

}  // namespace

std::string_view measurement_class_name(MeasurementClass c) {
  for (const auto& [cls, name] : kClassNames)
    if (cls == c) return name;
  return "?";
}

std::vector<MeasurementClass> required_measurement_classes() {
  return {MeasurementClass::CpuGemm, MeasurementClass::CpuGemmDeviceMem,
          MeasurementClass::GpuGemmHbm, MeasurementClass::GpuGemmHbmHostAlloc,
          MeasurementClass::GpuGemmHostMem, MeasurementClass::LinkCopy};
}

HardwareProfile calibrate(const json& doc, const std::optional<HardwareProfile>& base) {
  const json* list = nullptr;
  if (doc.is_object() && doc.contains("measurements")) list = &doc["measurements"];
  else if (doc.is_array()) list = &doc;
  else if (!doc.is_null() && !doc.is_object())
    throw Error(ErrorCode::InvalidArgument, "measurement document must be an object or array");

  if (list != nullptr && !list->is_array())
    throw Error(ErrorCode::InvalidArgument, "'measurements' must be an array");
  if (list == nullptr || list->empty())
    throw Error(ErrorCode::Underdetermined, "no measurements supplied");

  std::map<MeasurementClass, RateFit> fits;
  std::vector<double> overheads;
  StreamTable stream;

  for (std::size_t i = 0; i < list->size(); ++i) {
    const json& m = (*list)[i];
    if (!m.is_object() || !m.contains("class") || !m["class"].is_string())
      bad_entry(i, "expected an object with a 'class' string");
    const MeasurementClass cls = class_from_name(m["class"].get<std::string>(), i);

    if (cls == MeasurementClass::Stream) {
      try {
        const StreamKey key{processor_from_name(m.at("processor").get<std::string>()),
                            memory_kind_from_name(m.at("memory").get<std::string>()),
                            stream_kernel_from_name(m.at("kernel").get<std::string>())};
        stream[key] = positive_number(m, "gbs", i);
      } catch (const json::exception& e) {
        bad_entry(i, std::string("stream entry needs processor, memory, kernel: ") + e.what());
      } catch (const Error& e) {
        if (e.code() != ErrorCode::InvalidArgument) throw;
        bad_entry(i, e.what());
      }
      continue;
    }
    if (cls == MeasurementClass::Overhead) {
      overheads.push_back(time_seconds(m, i));
      continue;
    }
    const double work = is_gemm_class(cls) ? gemm_work(m, i) : copy_work(m, i);
    fits[cls].add(work, time_seconds(m, i));
  }

  if (!base) {
    std::string missing;
    for (MeasurementClass c : required_measurement_classes()) {
      if (fits.count(c)) continue;
      if (!missing.empty()) missing += ", ";
      missing += measurement_class_name(c);
    }
    if (!missing.empty())
      throw Error(ErrorCode::Underdetermined, "missing measurement classes: " + missing);
  }

  HardwareProfile p = base.value_or(HardwareProfile{});
  const std::string default_name = base ? base->name + "_calibrated" : "calibrated";
  p.name = doc.is_object() ? doc.value("name", default_name) : default_name;
  const bool had_migration = fits.count(MeasurementClass::Migration) != 0;
  for (const auto& [cls, fit] : fits) {
    const double rate = fit.rate();
    switch (cls) {
      case MeasurementClass::CpuGemm: p.cpu_gemm_rate = rate; break;
      case MeasurementClass::CpuGemmDeviceMem: p.cpu_rate_on_device_mem = rate; break;
      case MeasurementClass::GpuGemmHbm: p.gpu_gemm_rate_hbm = rate; break;
      case MeasurementClass::GpuGemmHbmHostAlloc: p.gpu_gemm_rate_hbm_hostalloc = rate; break;
      case MeasurementClass::GpuGemmHostMem: p.gpu_gemm_rate_hostmem = rate; break;
      case MeasurementClass::LinkCopy:
        p.link_bandwidth = rate;
        // Migration rides the same link unless measured separately.
        if (!had_migration) p.migration_bandwidth = rate;
        break;
      case MeasurementClass::Migration: p.migration_bandwidth = rate; break;
      default: break;
    }
  }
  if (!overheads.empty()) {
    double sum = 0;
    for (double o : overheads) sum += o;
    p.per_call_overhead = sum / static_cast<double>(overheads.size());
  }
  for (const auto& [key, gbs] : stream) p.stream_table[key] = gbs;
  p.validate();
  return p;
}

HardwareProfile calibrate_file(const std::string& path,
                               const std::optional<HardwareProfile>& base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open measurements '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos)
    throw Error(ErrorCode::Underdetermined, "measurement file '" + path + "' is empty");
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded())
    throw Error(ErrorCode::InvalidArgument, "measurement file '" + path + "' is not valid JSON");
  return calibrate(doc, base);
}

}  // namespace scilib
