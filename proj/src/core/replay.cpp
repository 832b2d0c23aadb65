#include "replay.hpp"

#include <cinttypes>
#include <cstdio>
#include <random>

namespace scilib {

ReplayReport replay(const Trace& trace, const Strategy& strategy,
                    const HardwareProfile& profile, const OffloadConfig& cfg) {
  cfg.validate();
  profile.validate();
  trace.validate();

  ResidencyRegistry registry(cfg.page_size, cfg.device_capacity);
  const bool migrating = strategy.kind() == Strategy::Kind::FirstTouchMigrate;
  const bool copying = strategy.kind() == Strategy::Kind::CopyPerCall;

  ReplayReport report;
  report.strategy_code = std::string(strategy.code());
  report.profile_name = profile.name;
  report.threshold = cfg.threshold;
  report.page_size = cfg.page_size;
  report.per_call.reserve(trace.calls.size());

  ReplayTotals& t = report.totals;
  for (const GemmCall& call : trace.calls) {
    Decision decision = should_offload(call, cfg);
    if (decision.offloaded() && copying && device_working_set(call) > cfg.device_capacity)
      decision = Decision::host(Reason::CapacityExceeded);

    CostBreakdown c = cost(call, strategy, profile, migrating ? &registry : nullptr, decision);
    if (decision.offloaded() && c.executed_on == Processor::CPU)
      decision = Decision::host(Reason::CapacityExceeded);

    t.wall_s += c.total();
    t.kernel_s += c.kernel_s;
    t.transfer_s += c.transfer_s;
    t.migration_s += c.migration_s;
    t.other_s += c.other_s;
    t.bytes_moved += c.bytes_moved;
    if (decision.offloaded()) ++t.calls_offloaded;
    else ++t.calls_host;

    report.per_call.push_back(CallRecord{call.seq, decision, c});
  }
  report.reuse = registry.reuse_stats();
  return report;
}

Comparison compare(const Trace& trace, std::span<const Strategy> strategies,
                   const HardwareProfile& profile, const OffloadConfig& cfg) {
  if (strategies.empty())
    throw Error(ErrorCode::InvalidArgument, "compare needs at least one strategy");
  Comparison cmp;
  for (const Strategy& s : strategies) cmp.reports.push_back(replay(trace, s, profile, cfg));
  const double base = cmp.reports.front().totals.wall_s;
  for (const ReplayReport& r : cmp.reports)
    cmp.speedups.push_back(r.totals.wall_s > 0 ? base / r.totals.wall_s : 1.0);
  return cmp;
}

namespace {

Routine routine_for_elem(std::uint32_t elem) {
  switch (elem) {
    case 4: return Routine::Sgemm;
    case 8: return Routine::Dgemm;
    case 16: return Routine::Zgemm;
    default: break;
  }
  throw Error(ErrorCode::SpecError, "element size must be 4, 8 or 16 bytes");
}

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }

}  // namespace

Trace gen_synthetic(const SyntheticSpec& spec) {
  if (spec.n_matrices < 1) throw Error(ErrorCode::SpecError, "n_matrices must be >= 1");
  if (spec.reuse_factor < 1) throw Error(ErrorCode::SpecError, "reuse_factor must be >= 1");
  if (spec.reuse_factor > kMaxSyntheticCalls / spec.n_matrices)
    throw Error(ErrorCode::SpecError, "n_matrices * reuse_factor exceeds the call limit");
  if (spec.m < 1 || spec.n < 1 || spec.k < 1)
    throw Error(ErrorCode::SpecError, "dims must be >= 1");
  const std::uint64_t ps = spec.page_size;
  if (ps == 0 || (ps & (ps - 1)) != 0)
    throw Error(ErrorCode::SpecError, "page size must be a power of two");

  const Routine routine = spec.routine.value_or(routine_for_elem(spec.elem_size));
  if (routine_elem_size(routine) != spec.elem_size)
    throw Error(ErrorCode::SpecError, "element size does not match routine");

  // Dims are bounded so that the region arithmetic below cannot overflow
  // before the budget check.
  constexpr std::uint64_t kMaxDim = 1ull << 31;
  if (spec.m > kMaxDim || spec.n > kMaxDim || spec.k > kMaxDim)
    throw Error(ErrorCode::SpecError, "dims exceed the 32-bit BLAS integer range");

  const bool a_plain = spec.trans_a == Trans::N;
  const bool b_plain = spec.trans_b == Trans::N;
  const std::uint64_t lda = a_plain ? spec.m : spec.k;
  const std::uint64_t ldb = b_plain ? spec.k : spec.n;
  const std::uint64_t ldc = spec.m;

  const unsigned __int128 elem = spec.elem_size;
  const unsigned __int128 a_bytes = static_cast<unsigned __int128>(spec.m) * spec.k * elem;
  const unsigned __int128 b_bytes = static_cast<unsigned __int128>(spec.k) * spec.n * elem;
  const unsigned __int128 c_bytes = static_cast<unsigned __int128>(spec.m) * spec.n * elem;
  const unsigned __int128 per_set = (a_bytes + ps) + (b_bytes + ps) + (c_bytes + ps);
  if (per_set * spec.n_matrices + kSyntheticBaseAddress > kSyntheticAddressBudget)
    throw Error(ErrorCode::SpecError, "operands exceed the synthetic address-space budget");

  struct OperandSet {
    std::uint64_t a, b, c;
  };
  std::vector<OperandSet> sets;
  sets.reserve(spec.n_matrices);
  std::uint64_t cursor = kSyntheticBaseAddress;
  for (std::uint64_t i = 0; i < spec.n_matrices; ++i) {
    OperandSet s;
    s.a = cursor;
    cursor = align_up(cursor + static_cast<std::uint64_t>(a_bytes), ps);
    s.b = cursor;
    cursor = align_up(cursor + static_cast<std::uint64_t>(b_bytes), ps);
    s.c = cursor;
    cursor = align_up(cursor + static_cast<std::uint64_t>(c_bytes), ps);
    sets.push_back(s);
  }

  const std::uint64_t total = spec.n_matrices * spec.reuse_factor;
  std::vector<std::uint64_t> order(total);
  for (std::uint64_t i = 0; i < total; ++i) order[i] = i / spec.reuse_factor;
  // Fisher-Yates with raw engine output: the engine sequence is fixed by the
  // standard, so the interleaving is identical on every platform.
  std::mt19937_64 rng(spec.seed);
  for (std::uint64_t i = total; i > 1; --i) {
    const std::uint64_t j = rng() % i;
    std::swap(order[i - 1], order[j]);
  }

  Trace trace;
  trace.header.page_size = ps;
  trace.header.source = TraceSource::Synthetic;
  trace.header.machine = "synthetic";
  trace.calls.reserve(total);
  for (std::uint64_t i = 0; i < total; ++i) {
    const OperandSet& s = sets[order[i]];
    GemmArgs args;
    args.routine = routine;
    args.trans_a = spec.trans_a;
    args.trans_b = spec.trans_b;
    args.m = spec.m;
    args.n = spec.n;
    args.k = spec.k;
    args.a = s.a;
    args.lda = lda;
    args.b = s.b;
    args.ldb = ldb;
    args.c = s.c;
    args.ldc = ldc;
    trace.calls.push_back(make_gemm_call(args, i, 0));
  }
  return trace;
}

nlohmann::json reuse_stats_to_json(const ReuseStats& stats) {
  return {{"migrated_bytes", stats.migrated_bytes},
          {"mean_touches_per_page", stats.mean_touches_per_page},
          {"max_touches", stats.max_touches},
          {"touched_pages", stats.touched_pages},
          {"resident_bytes", stats.resident_bytes}};
}

namespace {

nlohmann::json totals_to_json(const ReplayTotals& t) {
  return {{"wall_s", t.wall_s},
          {"kernel_s", t.kernel_s},
          {"transfer_s", t.transfer_s},
          {"migration_s", t.migration_s},
          {"other_s", t.other_s},
          {"compute_plus_data_s", t.compute_plus_data_s()},
          {"bytes_moved", t.bytes_moved},
          {"calls_offloaded", t.calls_offloaded},
          {"calls_host", t.calls_host}};
}

}  // namespace

nlohmann::json report_to_json(const ReplayReport& report) {
  nlohmann::json calls = nlohmann::json::array();
  for (const CallRecord& r : report.per_call) {
    calls.push_back({{"seq", r.seq},
                     {"verdict", verdict_name(r.decision.verdict())},
                     {"reason", reason_name(r.decision.reason())},
                     {"executed_on", processor_name(r.cost.executed_on)},
                     {"path", execution_path_name(r.cost.path)},
                     {"transfer_s", r.cost.transfer_s},
                     {"kernel_s", r.cost.kernel_s},
                     {"migration_s", r.cost.migration_s},
                     {"other_s", r.cost.other_s},
                     {"total_s", r.cost.total()},
                     {"bytes_moved", r.cost.bytes_moved}});
  }
  return {{"strategy", report.strategy_code},
          {"profile", report.profile_name},
          {"threshold", report.threshold},
          {"page_size", report.page_size},
          {"calls", report.per_call.size()},
          {"per_call", std::move(calls)},
          {"totals", totals_to_json(report.totals)},
          {"reuse", reuse_stats_to_json(report.reuse)}};
}

nlohmann::json comparison_to_json(const Comparison& cmp) {
  nlohmann::json rows = nlohmann::json::array();
  nlohmann::json reports = nlohmann::json::array();
  for (std::size_t i = 0; i < cmp.reports.size(); ++i) {
    const ReplayReport& r = cmp.reports[i];
    rows.push_back({{"strategy", r.strategy_code},
                    {"wall_s", r.totals.wall_s},
                    {"compute_plus_data_s", r.totals.compute_plus_data_s()},
                    {"bytes_moved", r.totals.bytes_moved},
                    {"speedup", cmp.speedups[i]}});
    reports.push_back(report_to_json(r));
  }
  return {{"profile", cmp.reports.front().profile_name},
          {"rows", std::move(rows)},
          {"reports", std::move(reports)}};
}

std::string comparison_to_text(const Comparison& cmp) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %14s %16s %18s %9s\n", "strategy", "wall (s)",
                "compute+data (s)", "bytes moved", "speedup");
  out += line;
  for (std::size_t i = 0; i < cmp.reports.size(); ++i) {
    const ReplayReport& r = cmp.reports[i];
    std::snprintf(line, sizeof line, "%-10s %14.6f %16.6f %18" PRIu64 " %9.2f\n",
                  r.strategy_code.c_str(), r.totals.wall_s, r.totals.compute_plus_data_s(),
                  r.totals.bytes_moved, cmp.speedups[i]);
    out += line;
  }
  return out;
}

std::string report_summary(const ReplayReport& report) {
  const ReplayTotals& t = report.totals;
  char line[512];
  std::snprintf(line, sizeof line,
                "strategy=%s profile=%s calls=%zu offloaded=%" PRIu64 " host=%" PRIu64
                " wall=%.4f ms compute+data=%.4f ms kernel=%.4f ms transfer=%.4f ms"
                " migration=%.4f ms other=%.4f ms bytes=%" PRIu64,
                report.strategy_code.c_str(), report.profile_name.c_str(),
                report.per_call.size(), t.calls_offloaded, t.calls_host, t.wall_s * 1e3,
                t.compute_plus_data_s() * 1e3, t.kernel_s * 1e3, t.transfer_s * 1e3,
                t.migration_s * 1e3, t.other_s * 1e3, t.bytes_moved);
  return line;
}

}  // namespace scilib
