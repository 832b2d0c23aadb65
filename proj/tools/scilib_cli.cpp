// scilib command-line front end. Everything goes through the C API.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scilib/scilib.h"

namespace {

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitTraceFormat = 2;
constexpr int kExitUnknownProfile = 3;
constexpr int kExitUnderdetermined = 4;

struct Failure {
  scilib_status status;
  std::string message;
};

int exit_code_for(scilib_status s) {
  switch (s) {
    case SCILIB_OK: return kExitOk;
    case SCILIB_ERR_TRACE_FORMAT: return kExitTraceFormat;
    case SCILIB_ERR_UNKNOWN_PROFILE: return kExitUnknownProfile;
    case SCILIB_ERR_UNDERDETERMINED: return kExitUnderdetermined;
    default: return kExitFailure;
  }
}

void check(scilib_status s) {
  if (s != SCILIB_OK) throw Failure{s, scilib_last_error()};
}

template <class T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};

using ConfigPtr = std::unique_ptr<scilib_config, Deleter<scilib_config, scilib_config_destroy>>;
using ProfilePtr = std::unique_ptr<scilib_profile, Deleter<scilib_profile, scilib_profile_destroy>>;
using TracePtr = std::unique_ptr<scilib_trace, Deleter<scilib_trace, scilib_trace_destroy>>;
using ReportPtr = std::unique_ptr<scilib_report, Deleter<scilib_report, scilib_report_destroy>>;
using ComparisonPtr =
    std::unique_ptr<scilib_comparison, Deleter<scilib_comparison, scilib_comparison_destroy>>;

// Takes ownership of a string returned by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  scilib_string_free(s);
  return out;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (out) out << text;
  if (out) out.flush();
  if (!out) throw Failure{SCILIB_ERR_IO, "cannot write '" + path + "'"};
}

struct PolicyFlags {
  std::optional<std::string> threshold;
  std::optional<std::string> routines;
  std::optional<std::string> page_size;
  std::optional<std::string> capacity;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--threshold", threshold, "Offload threshold on (m*n*k)^(1/3) [500]");
    cmd->add_option("--routines", routines, "Offload-enabled routines, e.g. dgemm,zgemm [all]");
    cmd->add_option("--page-size", page_size, "Residency page size in bytes [trace header]");
    cmd->add_option("--capacity", capacity, "Device memory capacity in bytes [96 GiB]");
  }

  // Starts from the defaults, ignoring the environment, so results depend
  // only on flags and input files.
  ConfigPtr build(const scilib_trace* trace) const {
    scilib_config* raw = nullptr;
    check(scilib_config_create_default(&raw));
    ConfigPtr cfg(raw);
    const std::string trace_page = std::to_string(scilib_trace_page_size(trace));
    check(scilib_config_set(cfg.get(), "SCILIB_PAGE_SIZE", page_size.value_or(trace_page).c_str()));
    if (threshold) check(scilib_config_set(cfg.get(), "SCILIB_THRESHOLD", threshold->c_str()));
    if (routines) check(scilib_config_set(cfg.get(), "SCILIB_ROUTINES", routines->c_str()));
    if (capacity) check(scilib_config_set(cfg.get(), "SCILIB_DEVICE_CAPACITY", capacity->c_str()));
    return cfg;
  }
};

TracePtr load_trace(const std::string& path) {
  scilib_trace* t = nullptr;
  check(scilib_trace_load(path.c_str(), &t));
  return TracePtr(t);
}

ProfilePtr resolve_profile(const std::string& name) {
  scilib_profile* p = nullptr;
  check(scilib_profile_resolve(name.c_str(), &p));
  return ProfilePtr(p);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct ReplayCmd {
  std::string trace;
  std::string strategy = "3";
  std::string profile = "gh200";
  std::optional<std::string> out;
  PolicyFlags policy;

  void run() const {
    TracePtr t = load_trace(trace);
    ProfilePtr p = resolve_profile(profile);
    ConfigPtr cfg = policy.build(t.get());
    scilib_report* raw = nullptr;
    check(scilib_replay(t.get(), strategy.c_str(), p.get(), cfg.get(), &raw));
    ReportPtr r(raw);
    if (out) {
      char* json = nullptr;
      check(scilib_report_to_json(r.get(), &json));
      write_file(*out, take(json));
    }
    char* summary = nullptr;
    check(scilib_report_summary(r.get(), &summary));
    std::printf("%s\n", take(summary).c_str());
  }
};

struct CompareCmd {
  std::string trace;
  std::string strategies = "1,2H,2D,3";
  std::string profile = "gh200";
  std::optional<std::string> out;
  PolicyFlags policy;

  void run() const {
    TracePtr t = load_trace(trace);
    ProfilePtr p = resolve_profile(profile);
    ConfigPtr cfg = policy.build(t.get());
    const std::vector<std::string> codes = split_list(strategies);
    std::vector<const char*> ptrs;
    for (const std::string& c : codes) ptrs.push_back(c.c_str());
    scilib_comparison* raw = nullptr;
    check(scilib_compare(t.get(), ptrs.data(), ptrs.size(), p.get(), cfg.get(), &raw));
    ComparisonPtr cmp(raw);
    if (out) {
      char* json = nullptr;
      check(scilib_comparison_to_json(cmp.get(), &json));
      write_file(*out, take(json));
    }
    char* text = nullptr;
    check(scilib_comparison_to_text(cmp.get(), &text));
    std::fputs(take(text).c_str(), stdout);
  }
};

struct GenCmd {
  std::uint64_t matrices = 1;
  std::uint64_t reuse = 1;
  std::vector<std::uint64_t> dims;
  std::uint32_t elem = 8;
  std::uint64_t seed = 0;
  std::uint64_t page_size = 4096;
  std::string trans = "TN";
  std::string out;

  void run() const {
    scilib_synthetic_spec spec;
    scilib_synthetic_spec_init(&spec);
    spec.n_matrices = matrices;
    spec.reuse_factor = reuse;
    spec.m = dims.at(0);
    spec.n = dims.at(1);
    spec.k = dims.at(2);
    spec.elem_size = elem;
    spec.seed = seed;
    spec.page_size = page_size;
    if (trans.size() != 2) throw Failure{SCILIB_ERR_SPEC, "--trans takes two characters, e.g. TN"};
    spec.trans_a = trans[0];
    spec.trans_b = trans[1];
    scilib_trace* raw = nullptr;
    check(scilib_trace_generate(&spec, &raw));
    TracePtr t(raw);
    check(scilib_trace_save(t.get(), out.c_str()));
    std::printf("wrote %zu calls to %s\n", scilib_trace_call_count(t.get()), out.c_str());
  }
};

struct CalibrateCmd {
  std::string measurements;
  std::optional<std::string> base;
  std::optional<std::string> out;

  void run() const {
    ProfilePtr b;
    if (base) b = resolve_profile(*base);
    scilib_profile* raw = nullptr;
    check(scilib_profile_calibrate(measurements.c_str(), b.get(), &raw));
    ProfilePtr p(raw);
    char* json = nullptr;
    check(scilib_profile_to_json(p.get(), &json));
    const std::string text = take(json);
    if (out) write_file(*out, text);
    else std::fputs(text.c_str(), stdout);
  }
};

struct InspectCmd {
  std::optional<std::string> trace;
  std::optional<std::string> stats;
  std::optional<std::string> profile;
  PolicyFlags policy;

  void run() const {
    if (!trace && !stats && !profile)
      throw Failure{SCILIB_ERR_INVALID_ARGUMENT, "inspect needs --trace, --stats or --profile"};
    if (trace) {
      TracePtr t = load_trace(*trace);
      ConfigPtr cfg = policy.build(t.get());
      char* json = nullptr;
      check(scilib_trace_summary_json(t.get(), cfg.get(), &json));
      std::fputs(take(json).c_str(), stdout);
    }
    if (stats) {
      char* text = nullptr;
      check(scilib_stats_summary(stats->c_str(), &text));
      std::fputs(take(text).c_str(), stdout);
    }
    if (profile) {
      ProfilePtr p = resolve_profile(*profile);
      char* json = nullptr;
      check(scilib_profile_to_json(p.get(), &json));
      std::fputs(take(json).c_str(), stdout);
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BLAS offload replay, comparison and calibration tool"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(scilib_version()));

  ReplayCmd replay;
  CLI::App* replay_app = app.add_subcommand("replay", "Replay a trace under one strategy");
  replay_app->add_option("--trace", replay.trace, "Trace file (JSON Lines)")->required();
  replay_app->add_option("--strategy", replay.strategy, "1, 2H, 2D or 3")->capture_default_str();
  replay_app->add_option("--profile", replay.profile, "Built-in profile name or JSON path")
      ->capture_default_str();
  replay_app->add_option("--out", replay.out, "Write the report JSON here");
  replay.policy.add_to(replay_app);

  CompareCmd compare;
  CLI::App* compare_app = app.add_subcommand("compare", "Replay a trace under several strategies");
  compare_app->add_option("--trace", compare.trace, "Trace file (JSON Lines)")->required();
  compare_app->add_option("--strategies", compare.strategies, "Comma-separated strategy codes")
      ->capture_default_str();
  compare_app->add_option("--profile", compare.profile, "Built-in profile name or JSON path")
      ->capture_default_str();
  compare_app->add_option("--out", compare.out, "Write the comparison JSON here");
  compare.policy.add_to(compare_app);

  GenCmd gen;
  CLI::App* gen_app = app.add_subcommand("gen", "Generate a synthetic trace");
  gen_app->add_option("--matrices", gen.matrices, "Number of operand sets")->capture_default_str();
  gen_app->add_option("--reuse", gen.reuse, "Calls per operand set")->capture_default_str();
  gen_app->add_option("--dims", gen.dims, "m,n,k")->delimiter(',')->expected(3)->required();
  gen_app->add_option("--elem", gen.elem, "Element size in bytes (4, 8, 16)")->capture_default_str();
  gen_app->add_option("--seed", gen.seed, "Interleaving seed")->capture_default_str();
  gen_app->add_option("--page-size", gen.page_size, "Page size in bytes")->capture_default_str();
  gen_app->add_option("--trans", gen.trans, "transa and transb, e.g. TN")->capture_default_str();
  gen_app->add_option("--out", gen.out, "Output trace path")->required();

  CalibrateCmd calibrate;
  CLI::App* cal_app = app.add_subcommand("calibrate", "Fit a hardware profile to measurements");
  cal_app->add_option("--measurements", calibrate.measurements, "Measurement JSON file")
      ->required();
  cal_app->add_option("--base", calibrate.base, "Profile supplying unmeasured rates");
  cal_app->add_option("--out", calibrate.out, "Write the profile JSON here instead of stdout");

  InspectCmd inspect;
  CLI::App* inspect_app = app.add_subcommand("inspect", "Summarize a trace, stats file or profile");
  inspect_app->add_option("--trace", inspect.trace, "Trace file");
  inspect_app->add_option("--stats", inspect.stats, "Stats file written by the preload library");
  inspect_app->add_option("--profile", inspect.profile, "Built-in profile name or JSON path");
  inspect.policy.add_to(inspect_app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitFailure;
  }

  try {
    if (*replay_app) replay.run();
    else if (*compare_app) compare.run();
    else if (*gen_app) gen.run();
    else if (*cal_app) calibrate.run();
    else if (*inspect_app) inspect.run();
  } catch (const Failure& f) {
    std::fprintf(stderr, "scilib: error: %s\n", f.message.c_str());
    return exit_code_for(f.status);
  }
  return kExitOk;
}
