#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "../core/model.hpp"
#include "../core/policy.hpp"
#include "../core/residency.hpp"
#include "blas_abi.hpp"

namespace scilib::shim {

enum class BackendKind : std::uint8_t { HostPassthrough, Accelerated };

// Executes an offloaded call. Returning false means the backend could not
// run it and C is untouched; the interceptor then takes the host path.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendKind kind() const = 0;
  virtual bool run(const GemmArgList<float>& args) = 0;
  virtual bool run(const GemmArgList<double>& args) = 0;
  virtual bool run(const GemmArgList<cfloat>& args) = 0;
  virtual bool run(const GemmArgList<cdouble>& args) = 0;
};

// Offloaded calls execute on the host BLAS. Results are bit-identical to a
// direct call; strategy bookkeeping still happens.
class HostPassthroughBackend final : public Backend {
 public:
  explicit HostPassthroughBackend(HostBlas blas) : blas_(blas) {}
  BackendKind kind() const override { return BackendKind::HostPassthrough; }
  bool run(const GemmArgList<float>& a) override { return forward(a, blas_.sgemm); }
  bool run(const GemmArgList<double>& a) override { return forward(a, blas_.dgemm); }
  bool run(const GemmArgList<cfloat>& a) override { return forward(a, blas_.cgemm); }
  bool run(const GemmArgList<cdouble>& a) override { return forward(a, blas_.zgemm); }

 private:
  template <class T>
  static bool forward(const GemmArgList<T>& a, GemmFn<T> fn) {
    if (fn == nullptr) return false;
    a.forward_to(fn);
    return true;
  }
  HostBlas blas_;
};

// Slot for a device BLAS. No device library is linked, so every call
// reports failure and falls back to the host.
class AcceleratedStubBackend final : public Backend {
 public:
  BackendKind kind() const override { return BackendKind::Accelerated; }
  bool run(const GemmArgList<float>&) override { return false; }
  bool run(const GemmArgList<double>&) override { return false; }
  bool run(const GemmArgList<cfloat>&) override { return false; }
  bool run(const GemmArgList<cdouble>&) override { return false; }
};

struct RoutineStats {
  std::uint64_t calls_seen = 0;
  std::uint64_t calls_offloaded = 0;
  std::uint64_t calls_host = 0;
  std::array<std::uint64_t, 4> reasons{};  // indexed by Reason
};

struct InterceptStats {
  std::array<RoutineStats, 4> routines{};  // indexed by Routine
  std::uint64_t bytes_traced = 0;          // operand bytes (A + B + C) of seen calls
  std::uint64_t trace_lines = 0;
  std::uint64_t fallbacks = 0;
  std::uint64_t migrations_denied = 0;
  std::uint64_t calls_degenerate = 0;  // zero dims or bad arguments, forwarded untraced
  ReuseStats registry;

  std::uint64_t calls_seen() const;
  std::uint64_t calls_offloaded() const;
  std::uint64_t calls_host() const;
};

nlohmann::json stats_to_json(const InterceptStats& stats, const OffloadConfig& cfg);
std::string stats_to_text(const InterceptStats& stats);

// Everything between an exported gemm symbol and the BLAS it forwards to.
// Thread-safe; no lock is held while BLAS runs.
class Interceptor {
 public:
  Interceptor(OffloadConfig cfg, HostBlas host, std::unique_ptr<Backend> backend);
  ~Interceptor();

  Interceptor(const Interceptor&) = delete;
  Interceptor& operator=(const Interceptor&) = delete;

  void gemm(Routine routine, const GemmArgList<float>& args);
  void gemm(Routine routine, const GemmArgList<double>& args);
  void gemm(Routine routine, const GemmArgList<cfloat>& args);
  void gemm(Routine routine, const GemmArgList<cdouble>& args);

  InterceptStats stats() const;
  const OffloadConfig& config() const { return cfg_; }
  const ResidencyRegistry& registry() const { return registry_; }

  // Writes the stats file and flushes the trace; safe to call repeatedly.
  void flush();
  // flush() plus the trace footer; the trace is closed afterwards.
  void finish();

 private:
  template <class T>
  void intercept(Routine routine, const GemmArgList<T>& args, GemmFn<T> host_fn);
  void write_trace_line(GemmCall& call);
  void write_stats_locked();

  OffloadConfig cfg_;
  HostBlas host_;
  std::unique_ptr<Backend> backend_;
  ResidencyRegistry registry_;

  struct AtomicRoutineStats {
    std::atomic<std::uint64_t> seen{0}, offloaded{0}, host{0};
    std::array<std::atomic<std::uint64_t>, 4> reasons{};
  };
  std::array<AtomicRoutineStats, 4> routine_stats_;
  std::atomic<std::uint64_t> bytes_traced_{0};
  std::atomic<std::uint64_t> fallbacks_{0};
  std::atomic<std::uint64_t> migrations_denied_{0};
  std::atomic<std::uint64_t> calls_degenerate_{0};

  mutable std::mutex trace_mu_;
  bool tracing_ = false;  // fixed after construction
  std::FILE* trace_ = nullptr;
  std::uint64_t trace_seq_ = 0;
  bool finished_ = false;
};

}  // namespace scilib::shim
