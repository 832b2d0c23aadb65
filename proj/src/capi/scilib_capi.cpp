#include "scilib/scilib.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <new>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "../core/calibrate.hpp"
#include "../core/costmodel.hpp"
#include "../core/policy.hpp"
#include "../core/replay.hpp"
#include "../core/residency.hpp"
#include "../core/trace.hpp"

struct scilib_config {
  scilib::OffloadConfig cfg;
};
struct scilib_profile {
  scilib::HardwareProfile profile;
};
struct scilib_trace {
  scilib::Trace trace;
};
struct scilib_report {
  scilib::ReplayReport report;
};
struct scilib_comparison {
  scilib::Comparison cmp;
};
struct scilib_registry {
  scilib::ResidencyRegistry reg;
  scilib_registry(std::uint64_t page, std::uint64_t cap) : reg(page, cap) {}
};

namespace {

using namespace scilib;

thread_local std::string t_last_error;

scilib_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return SCILIB_ERR_INVALID_ARGUMENT;
    case ErrorCode::UnknownRoutine: return SCILIB_ERR_UNKNOWN_ROUTINE;
    case ErrorCode::ConfigParse: return SCILIB_ERR_CONFIG_PARSE;
    case ErrorCode::EmptyRegion: return SCILIB_ERR_EMPTY_REGION;
    case ErrorCode::TraceFormat: return SCILIB_ERR_TRACE_FORMAT;
    case ErrorCode::UnknownProfile: return SCILIB_ERR_UNKNOWN_PROFILE;
    case ErrorCode::SpecError: return SCILIB_ERR_SPEC;
    case ErrorCode::Underdetermined: return SCILIB_ERR_UNDERDETERMINED;
    case ErrorCode::Io: return SCILIB_ERR_IO;
    case ErrorCode::SymbolNotFound: return SCILIB_ERR_SYMBOL_NOT_FOUND;
  }
  return SCILIB_ERR_INTERNAL;
}

scilib_status fail(scilib_status s, std::string msg) {
  t_last_error = std::move(msg);
  return s;
}

// Runs `fn`, translating exceptions into status codes.
template <class F>
scilib_status guarded(F&& fn) {
  try {
    t_last_error.clear();
    fn();
    return SCILIB_OK;
  } catch (const Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(SCILIB_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SCILIB_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SCILIB_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

Strategy parse_strategy(const char* code) {
  require(code != nullptr, "strategy");
  auto s = Strategy::from_code(code);
  if (!s) throw Error(ErrorCode::InvalidArgument, std::string("unknown strategy '") + code + "'");
  return *s;
}

const OffloadConfig& config_or_default(const scilib_config* cfg) {
  static const OffloadConfig kDefault{};
  return cfg ? cfg->cfg : kDefault;
}

void fill_totals(const ReplayTotals& t, scilib_totals* out) {
  out->wall_s = t.wall_s;
  out->kernel_s = t.kernel_s;
  out->transfer_s = t.transfer_s;
  out->migration_s = t.migration_s;
  out->other_s = t.other_s;
  out->compute_plus_data_s = t.compute_plus_data_s();
  out->bytes_moved = t.bytes_moved;
  out->calls_offloaded = t.calls_offloaded;
  out->calls_host = t.calls_host;
}

void fill_reuse(const ReuseStats& r, scilib_reuse_stats* out) {
  out->migrated_bytes = r.migrated_bytes;
  out->mean_touches_per_page = r.mean_touches_per_page;
  out->max_touches = r.max_touches;
  out->touched_pages = r.touched_pages;
  out->resident_bytes = r.resident_bytes;
}

scilib_reason to_reason(Reason r) {
  switch (r) {
    case Reason::BelowThreshold: return SCILIB_REASON_BELOW_THRESHOLD;
    case Reason::RoutineDisabled: return SCILIB_REASON_ROUTINE_DISABLED;
    case Reason::Offloaded: return SCILIB_REASON_OFFLOADED;
    case Reason::CapacityExceeded: return SCILIB_REASON_CAPACITY_EXCEEDED;
  }
  return SCILIB_REASON_BELOW_THRESHOLD;
}

Trans trans_or_throw(char c) { return trans_from_char(c); }

nlohmann::json trace_summary(const Trace& trace, const OffloadConfig& cfg) {
  std::map<std::string, std::uint64_t> per_routine;
  std::set<std::uint64_t> threads;
  std::set<std::uint64_t> regions;
  std::uint64_t offloaded = 0;
  std::uint64_t operand_bytes = 0;
  std::uint64_t copy_bytes = 0;
  double flops = 0;
  for (const GemmCall& call : trace.calls) {
    ++per_routine[std::string(routine_name(call.routine))];
    threads.insert(call.thread_id);
    for (const MatrixOperand& op : call.operands) regions.insert(op.base_address);
    if (should_offload(call, cfg).offloaded()) ++offloaded;
    operand_bytes += device_working_set(call);
    copy_bytes += strategy1_bytes(call);
    flops += flop_count(call);
  }
  nlohmann::json routines = nlohmann::json::object();
  for (const auto& [name, n] : per_routine) routines[name] = n;
  return {{"calls", trace.calls.size()},
          {"page_size", trace.header.page_size},
          {"source", trace.header.source == TraceSource::Recorded ? "recorded" : "synthetic"},
          {"machine", trace.header.machine},
          {"has_footer", trace.has_footer},
          {"routines", std::move(routines)},
          {"threads", threads.size()},
          {"distinct_operand_bases", regions.size()},
          {"threshold", cfg.threshold},
          {"calls_offloaded", offloaded},
          {"calls_host", trace.calls.size() - offloaded},
          {"operand_bytes", operand_bytes},
          {"copy_per_call_bytes", copy_bytes},
          {"flops", flops}};
}

}  // namespace

extern "C" {

const char* scilib_version(void) { return "1.0.0"; }

const char* scilib_status_string(scilib_status status) {
  switch (status) {
    case SCILIB_OK: return "ok";
    case SCILIB_ERR_INVALID_ARGUMENT: return "invalid argument";
    case SCILIB_ERR_UNKNOWN_ROUTINE: return "unknown routine";
    case SCILIB_ERR_CONFIG_PARSE: return "configuration parse error";
    case SCILIB_ERR_EMPTY_REGION: return "empty region";
    case SCILIB_ERR_TRACE_FORMAT: return "trace format error";
    case SCILIB_ERR_UNKNOWN_PROFILE: return "unknown profile";
    case SCILIB_ERR_SPEC: return "invalid synthetic spec";
    case SCILIB_ERR_UNDERDETERMINED: return "underdetermined calibration";
    case SCILIB_ERR_IO: return "i/o error";
    case SCILIB_ERR_SYMBOL_NOT_FOUND: return "symbol not found";
    case SCILIB_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* scilib_last_error(void) { return t_last_error.c_str(); }

void scilib_string_free(char* s) { std::free(s); }

// ---- configuration

scilib_status scilib_config_create_default(scilib_config** out) {
  return guarded([&] {
    require(out != nullptr, "out");
    *out = new scilib_config{};
  });
}

scilib_status scilib_config_from_environ(scilib_config** out) {
  return guarded([&] {
    require(out != nullptr, "out");
    *out = new scilib_config{config_from_environ()};
  });
}

scilib_status scilib_config_parse(const char* const* names, const char* const* values,
                                  size_t count, scilib_config** out) {
  return guarded([&] {
    require(out != nullptr, "out");
    require(count == 0 || (names != nullptr && values != nullptr), "names/values");
    EnvMap env;
    for (size_t i = 0; i < count; ++i) {
      require(names[i] != nullptr && values[i] != nullptr, "names/values entry");
      env[names[i]] = values[i];
    }
    *out = new scilib_config{parse_config(env)};
  });
}

scilib_status scilib_config_set(scilib_config* cfg, const char* name, const char* value) {
  return guarded([&] {
    require(cfg != nullptr, "cfg");
    require(name != nullptr && value != nullptr, "name/value");
    OffloadConfig next = cfg->cfg;
    apply_config_var(next, name, value);
    next.validate();
    cfg->cfg = std::move(next);
  });
}

scilib_status scilib_config_to_env(const scilib_config* cfg, char** out) {
  return guarded([&] {
    require(cfg != nullptr && out != nullptr, "cfg/out");
    std::string text;
    for (const auto& [k, v] : to_env(cfg->cfg)) text += k + "=" + v + "\n";
    *out = dup_string(text);
  });
}

void scilib_config_destroy(scilib_config* cfg) { delete cfg; }

double scilib_effective_size(uint64_t m, uint64_t n, uint64_t k) {
  return effective_size(m, n, k);
}

scilib_status scilib_should_offload(const scilib_config* cfg, const char* routine,
                                    uint64_t m, uint64_t n, uint64_t k, int* offload,
                                    scilib_reason* reason) {
  return guarded([&] {
    require(routine != nullptr, "routine");
    const Decision d = should_offload(routine_from_name(routine), m, n, k, config_or_default(cfg));
    if (offload) *offload = d.offloaded() ? 1 : 0;
    if (reason) *reason = to_reason(d.reason());
  });
}

// ---- profiles

scilib_status scilib_profile_builtin(const char* name, scilib_profile** out) {
  return guarded([&] {
    require(name != nullptr && out != nullptr, "name/out");
    *out = new scilib_profile{builtin_profile(name)};
  });
}

scilib_status scilib_profile_load(const char* path, scilib_profile** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path/out");
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::UnknownProfile, std::string("cannot open profile '") + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string("profile '") + path + "': " + e.what());
    }
    HardwareProfile p = profile_from_json(j);
    p.validate();
    *out = new scilib_profile{std::move(p)};
  });
}

scilib_status scilib_profile_resolve(const char* name_or_path, scilib_profile** out) {
  if (name_or_path != nullptr) {
    for (const std::string& name : builtin_profile_names())
      if (name == name_or_path) return scilib_profile_builtin(name_or_path, out);
  }
  const scilib_status s = scilib_profile_load(name_or_path, out);
  if (s == SCILIB_ERR_UNKNOWN_PROFILE) {
    std::string known;
    for (const std::string& name : builtin_profile_names()) known += (known.empty() ? "" : ", ") + name;
    return fail(s, std::string("unknown profile '") + (name_or_path ? name_or_path : "") +
                       "' (not a file; built-in profiles: " + known + ")");
  }
  return s;
}

scilib_status scilib_profile_to_json(const scilib_profile* p, char** out) {
  return guarded([&] {
    require(p != nullptr && out != nullptr, "profile/out");
    *out = dup_string(profile_to_json(p->profile).dump(2) + "\n");
  });
}

scilib_status scilib_profile_save(const scilib_profile* p, const char* path) {
  return guarded([&] {
    require(p != nullptr && path != nullptr, "profile/path");
    write_text_file(path, profile_to_json(p->profile).dump(2) + "\n");
  });
}

const char* scilib_profile_name(const scilib_profile* p) {
  return p ? p->profile.name.c_str() : "";
}

scilib_status scilib_profile_calibrate(const char* measurements_path,
                                       const scilib_profile* base, scilib_profile** out) {
  return guarded([&] {
    require(measurements_path != nullptr && out != nullptr, "path/out");
    std::optional<HardwareProfile> b;
    if (base) b = base->profile;
    *out = new scilib_profile{calibrate_file(measurements_path, b)};
  });
}

void scilib_profile_destroy(scilib_profile* p) { delete p; }

// ---- traces

void scilib_synthetic_spec_init(scilib_synthetic_spec* spec) {
  if (spec == nullptr) return;
  const SyntheticSpec d;
  spec->n_matrices = d.n_matrices;
  spec->reuse_factor = d.reuse_factor;
  spec->m = d.m;
  spec->n = d.n;
  spec->k = d.k;
  spec->elem_size = d.elem_size;
  spec->trans_a = trans_char(d.trans_a);
  spec->trans_b = trans_char(d.trans_b);
  spec->seed = d.seed;
  spec->page_size = d.page_size;
}

scilib_status scilib_trace_load(const char* path, scilib_trace** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path/out");
    *out = new scilib_trace{load_trace(path)};
  });
}

scilib_status scilib_trace_generate(const scilib_synthetic_spec* spec, scilib_trace** out) {
  return guarded([&] {
    require(spec != nullptr && out != nullptr, "spec/out");
    SyntheticSpec s;
    s.n_matrices = spec->n_matrices;
    s.reuse_factor = spec->reuse_factor;
    s.m = spec->m;
    s.n = spec->n;
    s.k = spec->k;
    s.elem_size = spec->elem_size;
    try {
      s.trans_a = trans_or_throw(spec->trans_a);
      s.trans_b = trans_or_throw(spec->trans_b);
    } catch (const Error& e) {
      throw Error(ErrorCode::SpecError, e.what());
    }
    s.seed = spec->seed;
    s.page_size = spec->page_size;
    *out = new scilib_trace{gen_synthetic(s)};
  });
}

scilib_status scilib_trace_save(const scilib_trace* t, const char* path) {
  return guarded([&] {
    require(t != nullptr && path != nullptr, "trace/path");
    std::ostringstream os;
    write_trace(os, t->trace);
    write_text_file(path, os.str());
  });
}

size_t scilib_trace_call_count(const scilib_trace* t) { return t ? t->trace.calls.size() : 0; }

uint64_t scilib_trace_page_size(const scilib_trace* t) {
  return t ? t->trace.header.page_size : 0;
}

scilib_status scilib_trace_summary_json(const scilib_trace* t, const scilib_config* cfg,
                                        char** out) {
  return guarded([&] {
    require(t != nullptr && out != nullptr, "trace/out");
    *out = dup_string(trace_summary(t->trace, config_or_default(cfg)).dump(2) + "\n");
  });
}

void scilib_trace_destroy(scilib_trace* t) { delete t; }

// ---- replay

scilib_status scilib_replay(const scilib_trace* t, const char* strategy,
                            const scilib_profile* p, const scilib_config* cfg,
                            scilib_report** out) {
  return guarded([&] {
    require(t != nullptr && p != nullptr && out != nullptr, "trace/profile/out");
    const Strategy s = parse_strategy(strategy);
    *out = new scilib_report{replay(t->trace, s, p->profile, config_or_default(cfg))};
  });
}

scilib_status scilib_report_totals(const scilib_report* r, scilib_totals* out) {
  return guarded([&] {
    require(r != nullptr && out != nullptr, "report/out");
    fill_totals(r->report.totals, out);
  });
}

scilib_status scilib_report_reuse(const scilib_report* r, scilib_reuse_stats* out) {
  return guarded([&] {
    require(r != nullptr && out != nullptr, "report/out");
    fill_reuse(r->report.reuse, out);
  });
}

scilib_status scilib_report_to_json(const scilib_report* r, char** out) {
  return guarded([&] {
    require(r != nullptr && out != nullptr, "report/out");
    *out = dup_string(report_to_json(r->report).dump(2) + "\n");
  });
}

scilib_status scilib_report_summary(const scilib_report* r, char** out) {
  return guarded([&] {
    require(r != nullptr && out != nullptr, "report/out");
    *out = dup_string(report_summary(r->report));
  });
}

void scilib_report_destroy(scilib_report* r) { delete r; }

scilib_status scilib_compare(const scilib_trace* t, const char* const* strategies,
                             size_t count, const scilib_profile* p,
                             const scilib_config* cfg, scilib_comparison** out) {
  return guarded([&] {
    require(t != nullptr && p != nullptr && out != nullptr, "trace/profile/out");
    require(count == 0 || strategies != nullptr, "strategies");
    std::vector<Strategy> list;
    list.reserve(count);
    for (size_t i = 0; i < count; ++i) list.push_back(parse_strategy(strategies[i]));
    *out = new scilib_comparison{compare(t->trace, list, p->profile, config_or_default(cfg))};
  });
}

size_t scilib_comparison_size(const scilib_comparison* c) {
  return c ? c->cmp.reports.size() : 0;
}

scilib_status scilib_comparison_totals(const scilib_comparison* c, size_t index,
                                       scilib_totals* out, double* speedup) {
  return guarded([&] {
    require(c != nullptr, "comparison");
    if (index >= c->cmp.reports.size())
      throw Error(ErrorCode::InvalidArgument, "comparison index out of range");
    if (out) fill_totals(c->cmp.reports[index].totals, out);
    if (speedup) *speedup = c->cmp.speedups[index];
  });
}

scilib_status scilib_comparison_to_json(const scilib_comparison* c, char** out) {
  return guarded([&] {
    require(c != nullptr && out != nullptr, "comparison/out");
    *out = dup_string(comparison_to_json(c->cmp).dump(2) + "\n");
  });
}

scilib_status scilib_comparison_to_text(const scilib_comparison* c, char** out) {
  return guarded([&] {
    require(c != nullptr && out != nullptr, "comparison/out");
    *out = dup_string(comparison_to_text(c->cmp));
  });
}

void scilib_comparison_destroy(scilib_comparison* c) { delete c; }

// ---- registry

scilib_status scilib_registry_create(uint64_t page_size, uint64_t capacity,
                                     scilib_registry** out) {
  return guarded([&] {
    require(out != nullptr, "out");
    *out = new scilib_registry(page_size, capacity);
  });
}

scilib_status scilib_registry_touch(scilib_registry* reg, uint64_t base, uint64_t length,
                                    scilib_migration* out) {
  return guarded([&] {
    require(reg != nullptr, "registry");
    const MigrationAction a = reg->reg.touch(pages_for(base, length, reg->reg.page_size()));
    if (out) {
      out->kind = a.kind == MigrationAction::Kind::Migrated        ? SCILIB_MIGRATED
                  : a.kind == MigrationAction::Kind::AlreadyResident ? SCILIB_ALREADY_RESIDENT
                                                                     : SCILIB_DENIED;
      out->new_pages = a.new_pages;
      out->bytes = a.bytes;
    }
  });
}

scilib_status scilib_registry_evict(scilib_registry* reg, uint64_t base, uint64_t length,
                                    uint64_t* released) {
  return guarded([&] {
    require(reg != nullptr, "registry");
    const std::uint64_t n = reg->reg.evict(pages_for(base, length, reg->reg.page_size()));
    if (released) *released = n;
  });
}

scilib_status scilib_registry_stats(const scilib_registry* reg, scilib_reuse_stats* out) {
  return guarded([&] {
    require(reg != nullptr && out != nullptr, "registry/out");
    fill_reuse(reg->reg.reuse_stats(), out);
  });
}

void scilib_registry_destroy(scilib_registry* reg) { delete reg; }

// ---- interposer stats

scilib_status scilib_stats_summary(const char* path, char** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path/out");
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, std::string("cannot open stats file '") + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::InvalidArgument, std::string("stats file '") + path + "': " + e.what());
    }
    std::ostringstream os;
    os << "strategy " << j.at("strategy").get<std::string>() << ", threshold "
       << j.at("threshold").get<double>() << "\n";
    os << "calls: seen " << j.at("calls_seen").get<std::uint64_t>() << ", offloaded "
       << j.at("calls_offloaded").get<std::uint64_t>() << ", host "
       << j.at("calls_host").get<std::uint64_t>() << ", degenerate "
       << j.value("calls_degenerate", std::uint64_t{0}) << "\n";
    for (const auto& [name, r] : j.at("routines").items()) {
      if (r.at("calls_seen").get<std::uint64_t>() == 0) continue;
      os << "  " << name << ": seen " << r.at("calls_seen").get<std::uint64_t>()
         << ", offloaded " << r.at("calls_offloaded").get<std::uint64_t>() << ", host "
         << r.at("calls_host").get<std::uint64_t>() << "\n";
    }
    const auto& reg = j.at("registry");
    os << "migrated bytes " << reg.at("migrated_bytes").get<std::uint64_t>()
       << ", mean touches/page " << reg.at("mean_touches_per_page").get<double>()
       << ", fallbacks " << j.at("fallbacks").get<std::uint64_t>() << "\n";
    *out = dup_string(os.str());
  });
}

}  // extern "C"
