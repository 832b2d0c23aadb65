#include "interceptor.hpp"

#include <sys/syscall.h>
#include <unistd.h>

#include <chrono>
#include <cinttypes>
#include <fstream>

#include "../core/costmodel.hpp"
#include "../core/replay.hpp"
#include "../core/trace.hpp"

namespace scilib::shim {

namespace {

thread_local bool t_in_interception = false;

std::uint64_t now_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

std::uint64_t thread_id() {
  thread_local const std::uint64_t tid = static_cast<std::uint64_t>(::syscall(SYS_gettid));
  return tid;
}

std::string host_name() {
  char buf[256] = {};
  if (::gethostname(buf, sizeof buf - 1) != 0) return "unknown";
  return buf;
}

struct InterceptionGuard {
  InterceptionGuard() { t_in_interception = true; }
  ~InterceptionGuard() { t_in_interception = false; }
};

template <class T>
std::optional<GemmCall> decode(Routine routine, const GemmArgList<T>& a) {
  if (*a.m <= 0 || *a.n <= 0 || *a.k <= 0) return std::nullopt;
  if (*a.lda <= 0 || *a.ldb <= 0 || *a.ldc <= 0) return std::nullopt;
  try {
    GemmArgs args;
    args.routine = routine;
    args.trans_a = trans_from_char(*a.transa);
    args.trans_b = trans_from_char(*a.transb);
    args.m = static_cast<std::uint64_t>(*a.m);
    args.n = static_cast<std::uint64_t>(*a.n);
    args.k = static_cast<std::uint64_t>(*a.k);
    args.a = reinterpret_cast<std::uintptr_t>(a.a);
    args.lda = static_cast<std::uint64_t>(*a.lda);
    args.b = reinterpret_cast<std::uintptr_t>(a.b);
    args.ldb = static_cast<std::uint64_t>(*a.ldb);
    args.c = reinterpret_cast<std::uintptr_t>(a.c);
    args.ldc = static_cast<std::uint64_t>(*a.ldc);
    return make_gemm_call(args, 0, thread_id());
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

std::uint64_t InterceptStats::calls_seen() const {
  std::uint64_t n = 0;
  for (const auto& r : routines) n += r.calls_seen;
  return n;
}

std::uint64_t InterceptStats::calls_offloaded() const {
  std::uint64_t n = 0;
  for (const auto& r : routines) n += r.calls_offloaded;
  return n;
}

std::uint64_t InterceptStats::calls_host() const {
  std::uint64_t n = 0;
  for (const auto& r : routines) n += r.calls_host;
  return n;
}

nlohmann::json stats_to_json(const InterceptStats& stats, const OffloadConfig& cfg) {
  nlohmann::json routines = nlohmann::json::object();
  for (Routine r : kAllRoutines) {
    const RoutineStats& s = stats.routines[static_cast<std::size_t>(r)];
    nlohmann::json reasons = nlohmann::json::object();
    for (Reason why : {Reason::BelowThreshold, Reason::RoutineDisabled, Reason::Offloaded,
                       Reason::CapacityExceeded})
      reasons[std::string(reason_name(why))] = s.reasons[static_cast<std::size_t>(why)];
    routines[std::string(routine_name(r))] = {{"calls_seen", s.calls_seen},
                                              {"calls_offloaded", s.calls_offloaded},
                                              {"calls_host", s.calls_host},
                                              {"reasons", std::move(reasons)}};
  }
  return {{"strategy", std::string(cfg.strategy.code())},
          {"threshold", cfg.threshold},
          {"page_size", cfg.page_size},
          {"calls_seen", stats.calls_seen()},
          {"calls_offloaded", stats.calls_offloaded()},
          {"calls_host", stats.calls_host()},
          {"calls_degenerate", stats.calls_degenerate},
          {"bytes_traced", stats.bytes_traced},
          {"trace_lines", stats.trace_lines},
          {"fallbacks", stats.fallbacks},
          {"migrations_denied", stats.migrations_denied},
          {"routines", std::move(routines)},
          {"registry", reuse_stats_to_json(stats.registry)}};
}

std::string stats_to_text(const InterceptStats& stats) {
  std::string out = "scilib: intercept summary\n";
  char line[256];
  for (Routine r : kAllRoutines) {
    const RoutineStats& s = stats.routines[static_cast<std::size_t>(r)];
    if (s.calls_seen == 0) continue;
    std::snprintf(line, sizeof line,
                  "scilib:   %-6s seen=%" PRIu64 " offloaded=%" PRIu64 " host=%" PRIu64 "\n",
                  std::string(routine_name(r)).c_str(), s.calls_seen, s.calls_offloaded,
                  s.calls_host);
    out += line;
  }
  std::snprintf(line, sizeof line,
                "scilib:   fallbacks=%" PRIu64 " migrated=%" PRIu64
                " bytes mean_touches/page=%.2f\n",
                stats.fallbacks, stats.registry.migrated_bytes,
                stats.registry.mean_touches_per_page);
  out += line;
  return out;
}

Interceptor::Interceptor(OffloadConfig cfg, HostBlas host, std::unique_ptr<Backend> backend)
    : cfg_(std::move(cfg)),
      host_(host),
      backend_(std::move(backend)),
      registry_(cfg_.page_size, cfg_.device_capacity) {
  if (cfg_.trace_path) {
    trace_ = std::fopen(cfg_.trace_path->c_str(), "w");
    if (trace_ == nullptr) {
      std::fprintf(stderr, "scilib: cannot open trace file '%s'; tracing disabled\n",
                   cfg_.trace_path->c_str());
    } else {
      TraceHeader header;
      header.page_size = cfg_.page_size;
      header.source = TraceSource::Recorded;
      header.machine = host_name();
      const std::string line = format_trace_header(header);
      std::fprintf(trace_, "%s\n", line.c_str());
      tracing_ = true;
    }
  }
}

Interceptor::~Interceptor() { finish(); }

void Interceptor::gemm(Routine r, const GemmArgList<float>& a) { intercept(r, a, host_.sgemm); }
void Interceptor::gemm(Routine r, const GemmArgList<double>& a) { intercept(r, a, host_.dgemm); }
void Interceptor::gemm(Routine r, const GemmArgList<cfloat>& a) { intercept(r, a, host_.cgemm); }
void Interceptor::gemm(Routine r, const GemmArgList<cdouble>& a) { intercept(r, a, host_.zgemm); }

template <class T>
void Interceptor::intercept(Routine routine, const GemmArgList<T>& args, GemmFn<T> host_fn) {
  // BLAS calling BLAS (e.g. from a backend) is not intercepted twice.
  if (t_in_interception) {
    args.forward_to(host_fn);
    return;
  }
  InterceptionGuard guard;

  std::optional<GemmCall> call = decode(routine, args);
  if (!call) {
    calls_degenerate_.fetch_add(1, std::memory_order_relaxed);
    args.forward_to(host_fn);
    return;
  }

  const std::uint64_t t0 = tracing_ ? now_ns() : 0;
  const Decision decision = should_offload(*call, cfg_);
  auto& rs = routine_stats_[static_cast<std::size_t>(routine)];
  rs.seen.fetch_add(1, std::memory_order_relaxed);
  rs.reasons[static_cast<std::size_t>(decision.reason())].fetch_add(1, std::memory_order_relaxed);
  bytes_traced_.fetch_add(device_working_set(*call), std::memory_order_relaxed);

  if (cfg_.debug_level >= 3 || (cfg_.debug_level >= 2 && decision.offloaded())) {
    std::fprintf(stderr, "scilib: %s %c%c m=%" PRIu64 " n=%" PRIu64 " k=%" PRIu64 " -> %s\n",
                 std::string(routine_name(routine)).c_str(), trans_char(call->trans_a),
                 trans_char(call->trans_b), call->m, call->n, call->k,
                 std::string(reason_name(decision.reason())).c_str());
  }

  if (!decision.offloaded()) {
    rs.host.fetch_add(1, std::memory_order_relaxed);
    args.forward_to(host_fn);
  } else {
    rs.offloaded.fetch_add(1, std::memory_order_relaxed);
    if (cfg_.strategy.kind() == Strategy::Kind::FirstTouchMigrate) {
      const MigrationAction action = registry_.touch_all(call->operands);
      if (action.kind == MigrationAction::Kind::Denied)
        migrations_denied_.fetch_add(1, std::memory_order_relaxed);
    }
    if (!backend_ || !backend_->run(args)) {
      fallbacks_.fetch_add(1, std::memory_order_relaxed);
      if (cfg_.debug_level >= 1)
        std::fprintf(stderr, "scilib: backend failed for %s; running on host\n",
                     std::string(routine_name(routine)).c_str());
      args.forward_to(host_fn);
    }
  }

  if (tracing_) {
    call->t_enter_ns = t0;
    call->t_exit_ns = now_ns();
    write_trace_line(*call);
  }
}

void Interceptor::write_trace_line(GemmCall& call) {
  thread_local char buffer[kMaxTraceLine + 1];
  std::lock_guard lock(trace_mu_);
  if (trace_ == nullptr) return;
  call.seq = trace_seq_;
  const std::size_t n = format_trace_line(call, std::span(buffer, kMaxTraceLine));
  if (n == 0) return;
  buffer[n] = '\n';
  std::fwrite(buffer, 1, n + 1, trace_);
  ++trace_seq_;
}

InterceptStats Interceptor::stats() const {
  InterceptStats s;
  for (std::size_t i = 0; i < routine_stats_.size(); ++i) {
    const auto& src = routine_stats_[i];
    auto& dst = s.routines[i];
    dst.calls_seen = src.seen.load(std::memory_order_relaxed);
    dst.calls_offloaded = src.offloaded.load(std::memory_order_relaxed);
    dst.calls_host = src.host.load(std::memory_order_relaxed);
    for (std::size_t j = 0; j < dst.reasons.size(); ++j)
      dst.reasons[j] = src.reasons[j].load(std::memory_order_relaxed);
  }
  s.bytes_traced = bytes_traced_.load(std::memory_order_relaxed);
  s.fallbacks = fallbacks_.load(std::memory_order_relaxed);
  s.migrations_denied = migrations_denied_.load(std::memory_order_relaxed);
  s.calls_degenerate = calls_degenerate_.load(std::memory_order_relaxed);
  {
    std::lock_guard lock(trace_mu_);
    s.trace_lines = trace_seq_;
  }
  s.registry = registry_.reuse_stats();
  return s;
}

void Interceptor::write_stats_locked() {
  const InterceptStats s = stats();
  if (cfg_.stats_path) {
    std::ofstream out(*cfg_.stats_path, std::ios::trunc);
    if (out) out << stats_to_json(s, cfg_).dump(2) << '\n';
    if (!out)
      std::fprintf(stderr, "scilib: cannot write stats to '%s'\n", cfg_.stats_path->c_str());
  }
  if (cfg_.debug_level >= 1) std::fputs(stats_to_text(s).c_str(), stderr);
}

void Interceptor::flush() {
  write_stats_locked();
  std::lock_guard lock(trace_mu_);
  if (trace_) std::fflush(trace_);
}

void Interceptor::finish() {
  if (finished_) return;
  finished_ = true;
  write_stats_locked();
  std::lock_guard lock(trace_mu_);
  if (trace_) {
    const std::string footer = format_trace_footer(trace_seq_);
    std::fprintf(trace_, "%s\n", footer.c_str());
    std::fclose(trace_);
    trace_ = nullptr;
  }
}

}  // namespace scilib::shim
