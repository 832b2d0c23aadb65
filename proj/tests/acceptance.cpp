// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if
// any fails. Tolerances are fixed here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "core/policy.hpp"
#include "core/residency.hpp"
#include "shim/workload.hpp"
#include "support/golden.hpp"
#include "support/oracles.hpp"
#include "support/subprocess.hpp"

using namespace scilib;
using nlohmann::json;
using testsupport::read_file;
using testsupport::temp_path;

namespace {

const std::string kCli = SCILIB_CLI_PATH;
const std::string kShim = SCILIB_SHIM_PATH;
const std::string kDriver = GEMM_DRIVER_PATH;
const std::string kData = SCILIB_DATA_DIR;

constexpr double kGhTransferMs = 4.92;
constexpr double kGhTotalMs = 5.50;
constexpr double kGhTotalTol = 0.05;
constexpr double kPcieCopyMs = 31.79;
constexpr double kPcieNominalTol = 0.15;
constexpr double kPcieCalibratedTol = 0.02;
constexpr double kPlacementTol = 0.02;
constexpr double kTransferTol = 0.01;

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

bool within(double got, double want, double rel) { return std::abs(got - want) <= rel * want; }

testsupport::RunResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), kCli);
  return testsupport::run(args, golden::clean_env());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Replays `trace` and returns the report JSON; records failures in `c`.
json replay_json(Check& c, const std::string& trace, std::vector<std::string> extra) {
  const std::string out = temp_path("acc_report.json");
  std::vector<std::string> args = {"replay", "--trace", trace, "--out", out};
  args.insert(args.end(), extra.begin(), extra.end());
  const auto r = cli(args);
  c.expect(r.exit_code == 0, "replay exit " + std::to_string(r.exit_code) + " " + r.err);
  json j = r.exit_code == 0 ? json::parse(read_file(out)) : json{{"totals", json::object()}};
  std::remove(out.c_str());
  return j;
}

double ms(const json& report, const char* field) {
  const json& t = report["totals"];
  return t.contains(field) ? t[field].get<double>() * 1e3 : NAN;
}

std::string single_call_trace(Check& c) {
  const std::string path = temp_path("acc_single.jsonl");
  const auto r = cli({"gen", "--dims", "32,2400,93536", "--trans", "TN", "--out", path});
  c.expect(r.exit_code == 0, "gen single call");
  return path;
}

Check criterion1() {
  Check c;
  const std::string trace = single_call_trace(c);
  const auto t0 = std::chrono::steady_clock::now();
  const json gh = replay_json(c, trace, {"--strategy", "1", "--profile", "gh200"});
  const double runtime = seconds_since(t0);
  const json pcie = replay_json(c, trace, {"--strategy", "1", "--profile", "h100_pcie"});

  const std::string prof = temp_path("acc_h100_cal.json");
  const auto cal = cli({"calibrate", "--measurements", kData + "/h100_pcie_measurements.json",
                        "--base", "h100_pcie", "--out", prof});
  c.expect(cal.exit_code == 0, "calibrate h100_pcie");
  const json calibrated = replay_json(c, trace, {"--strategy", "1", "--profile", prof});

  const double transfer = ms(gh, "transfer_s"), total = ms(gh, "wall_s");
  const double nominal = ms(pcie, "transfer_s"), fitted = ms(calibrated, "transfer_s");
  c.expect(within(transfer, kGhTransferMs, kTransferTol), "gh200 transfer ~4.92 ms");
  c.expect(within(total, kGhTotalMs, kGhTotalTol), "gh200 total within 5% of 5.50 ms");
  c.expect(within(nominal, kPcieCopyMs, kPcieNominalTol), "h100_pcie nominal within 15%");
  c.expect(within(fitted, kPcieCopyMs, kPcieCalibratedTol), "h100_pcie calibrated within 2%");
  c.expect(runtime < 1.0, "replay runtime < 1 s");
  c.detail << "gh200 transfer=" << transfer << " ms total=" << total
           << " ms; h100_pcie nominal=" << nominal << " ms calibrated=" << fitted
           << " ms; replay " << runtime << " s";
  std::remove(prof.c_str());
  std::remove(trace.c_str());
  return c;
}

Check criterion2() {
  Check c;
  const std::string trace = single_call_trace(c);
  const json host = replay_json(c, trace, {"--strategy", "1", "--threshold", "1e6"});
  const json gpu = replay_json(c, trace, {"--strategy", "2D"});
  const json cpu_hbm = replay_json(c, trace, {"--strategy", "2D", "--threshold", "1e6"});
  const double h = ms(host, "wall_s");
  const double g = ms(gpu, "compute_plus_data_s");
  const double ch = ms(cpu_hbm, "wall_s");
  c.expect(within(h, 19.7, kPlacementTol), "host ~19.7 ms");
  c.expect(within(g, 0.84, kPlacementTol), "GPU on device memory ~0.84 ms");
  c.expect(within(ch, 24.9, kPlacementTol), "host on device memory ~24.9 ms");
  c.detail << "host=" << h << " ms gpu(hbm)=" << g << " ms host(hbm)=" << ch << " ms";
  std::remove(trace.c_str());
  return c;
}

Check criterion3() {
  Check c;
  const std::string trace = temp_path("acc_reuse.jsonl");
  const auto g = cli({"gen", "--reuse", "446", "--dims", "32,2400,93536", "--out", trace});
  c.expect(g.exit_code == 0, "gen 446-reuse trace");
  const json s1 = replay_json(c, trace, {"--strategy", "1"});
  const json s3 = replay_json(c, trace, {"--strategy", "3"});
  const json prof = json::parse(cli({"inspect", "--profile", "gh200"}).out, nullptr, false);

  const double b1 = s1["totals"].value("bytes_moved", 0.0);
  const double b3 = s3["totals"].value("bytes_moved", 0.0);
  const double ratio = b1 > 0 ? b3 / b1 : INFINITY;
  const double mig = ms(s3, "migration_s"), xfer = ms(s1, "transfer_s");
  const double bw = prof.is_object() ? prof.value("migration_bandwidth", 0.0) : 0.0;
  c.expect(ratio <= 1.0 / 400.0, "bytes ratio <= 1/400");
  c.expect(mig < 0.01 * xfer, "migration < 1% of Strategy 1 transfer");
  c.expect(within(bw, 370e9, 0.01), "migration bandwidth ~370 GB/s");
  c.detail << "bytes S3/S1=1/" << (b3 > 0 ? b1 / b3 : 0.0) << "; migration=" << mig
           << " ms vs S1 transfer=" << xfer << " ms at " << bw / 1e9 << " GB/s";
  std::remove(trace.c_str());
  return c;
}

Check criterion4() {
  Check c;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> logdim(0.0, std::log(200000.0));
  const OffloadConfig cfg;
  const std::uint64_t cube = 500ull * 500 * 500;
  int agree = 0, invariants = 0, offloads = 0;
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t m = static_cast<std::uint64_t>(std::exp(logdim(rng)));
    std::uint64_t n = static_cast<std::uint64_t>(std::exp(logdim(rng)));
    std::uint64_t k = static_cast<std::uint64_t>(std::exp(logdim(rng)));
    if (i % 3 == 0) {
      m = 1 + m % 2000;
      n = 1 + n % 2000;
      k = std::max<std::uint64_t>(1, cube / (m * n) + rng() % 3 - 1);
    }
    const bool expect = oracle::exceeds_cube(m, n, k, 500);
    offloads += expect;
    agree += should_offload(Routine::Dgemm, m, n, k, cfg).offloaded() == expect;
    bool ok = true;
    const std::uint64_t p[6][3] = {{m, n, k}, {m, k, n}, {n, m, k}, {n, k, m}, {k, m, n}, {k, n, m}};
    for (const auto& q : p) ok &= should_offload(Routine::Dgemm, q[0], q[1], q[2], cfg).offloaded() == expect;
    if (expect) {
      ok &= should_offload(Routine::Dgemm, m + 1, n, k, cfg).offloaded();
      ok &= should_offload(Routine::Dgemm, m, n + 1, k, cfg).offloaded();
      ok &= should_offload(Routine::Dgemm, m, n, k + 1, cfg).offloaded();
    } else if (m > 1) {
      ok &= !should_offload(Routine::Dgemm, m - 1, n, k, cfg).offloaded();
    }
    invariants += ok;
  }
  c.expect(agree == 1000, "oracle agreement");
  c.expect(invariants == 1000, "permutation and monotonicity");
  c.expect(offloads > 100 && offloads < 900, "samples on both sides");
  c.detail << agree << "/1000 agree with m*n*k > 500^3, " << invariants
           << "/1000 invariant checks, " << offloads << " offloads";
  return c;
}

Check criterion5() {
  Check c;
  constexpr std::uint64_t kPages = 10000;
  int steps = 0, idempotent = 0, idempotent_checks = 0;
  bool match = true, conserved = true, dominated = true, dedup = true;
  for (std::uint64_t page : {std::uint64_t{4096}, std::uint64_t{65536}}) {
    for (int round = 0; round < 4; ++round) {
      std::mt19937_64 rng(500 + round);
      const std::uint64_t capacity = round % 2 ? (500 + rng() % 2000) * page : kPages * page;
      ResidencyRegistry reg(page, capacity);
      oracle::PageSet ref(page, capacity);
      std::uint64_t copy_bytes = 0;
      for (int s = 0; s < 1000; ++s, ++steps) {
        if (rng() % 10 < 8) {
          std::vector<std::pair<std::uint64_t, std::uint64_t>> regions;
          std::vector<MatrixOperand> ops;
          for (int i = 0, n = 1 + static_cast<int>(rng() % 3); i < n; ++i) {
            const std::uint64_t base = (rng() % (kPages - 100)) * page + 4 * (rng() % (page / 4));
            const std::uint64_t len = 4 * (1 + rng() % (page * 20));
            regions.emplace_back(base, len);
            ops.push_back(MatrixOperand::make(base, len / 4, 1, len / 4, 4, OperandRole::A));
            copy_bytes += pages_for(base, len, page).count() * page;
          }
          std::uint64_t pages = 0;
          const auto expect = ref.touch(regions, &pages);
          const MigrationAction got = reg.touch_all(ops);
          match &= static_cast<int>(expect) == static_cast<int>(got.kind);
          if (got.kind == MigrationAction::Kind::Migrated) dedup &= got.new_pages == pages;
          if (got.kind != MigrationAction::Kind::Denied) {
            ++idempotent_checks;
            ref.touch(regions);
            idempotent += reg.touch_all(ops) == MigrationAction::already_resident();
          }
        } else {
          const std::uint64_t first = rng() % kPages;
          const std::uint64_t last = std::min(kPages - 1, first + rng() % 300);
          match &= reg.evict(PageRange{first, last}) == ref.evict(first, last);
        }
        match &= reg.resident_bytes() == ref.resident_bytes();
        conserved &= reg.bytes_migrated_total() == ref.migration_events() * page &&
                     reg.bytes_migrated_total() == ref.migrated_bytes();
        dominated &= reg.bytes_migrated_total() <= copy_bytes;
      }
      for (std::uint64_t p = 0; p < kPages; ++p) match &= reg.is_resident(p) == ref.resident(p);
    }
  }
  c.expect(match, "registry matches per-page oracle");
  c.expect(idempotent == idempotent_checks, "idempotence");
  c.expect(dedup, "shared pages migrate once");
  c.expect(conserved, "byte conservation");
  c.expect(dominated, "first-touch bytes <= page-rounded copy bytes");
  c.detail << steps << " steps over <= 10^4 pages, " << idempotent << "/" << idempotent_checks
           << " idempotent repeats";
  return c;
}

Check criterion6() {
  Check c;
  std::map<std::string, std::string> env = golden::clean_env();
  env["OPENBLAS_NUM_THREADS"] = "1";
  const std::string base_out = temp_path("acc_base.bin");
  const std::string shim_out = temp_path("acc_shim.bin");
  const std::string trace = temp_path("acc_trace.jsonl");
  const std::string stats = temp_path("acc_stats.json");
  const auto base = testsupport::run({kDriver, base_out}, env);
  c.expect(base.exit_code == 0, "baseline driver");

  env["LD_PRELOAD"] = kShim;
  env["SCILIB_TRACE"] = trace;
  env["SCILIB_STATS"] = stats;
  const auto t0 = std::chrono::steady_clock::now();
  const auto pre = testsupport::run({kDriver, shim_out}, env);
  const double runtime = seconds_since(t0);
  c.expect(pre.exit_code == 0, "preloaded driver: " + pre.err);

  const std::string a = read_file(base_out), b = read_file(shim_out);
  c.expect(!a.empty() && a == b, "bit-identical outputs");

  int call_lines = 0;
  std::istringstream lines(read_file(trace));
  for (std::string line; std::getline(lines, line);)
    call_lines += line.find("\"seq\"") != std::string::npos;
  c.expect(call_lines == 100, "100 trace call lines");

  std::uint64_t expected = 0;
  for (const workload::Shape& s : workload::shapes()) expected += oracle::exceeds_cube(s.m, s.n, s.k, 500);
  const json st = json::parse(read_file(stats), nullptr, false);
  const std::uint64_t offloaded = st.is_object() ? st.value("calls_offloaded", 0ull) : 0;
  c.expect(offloaded == expected, "calls_offloaded matches oracle");
  c.expect(runtime < 10.0, "runtime < 10 s");
  c.detail << a.size() << " output bytes identical=" << (a == b) << ", " << call_lines
           << " trace lines, offloaded " << offloaded << " (oracle " << expected << "), "
           << runtime << " s";
  for (const auto& p : {base_out, shim_out, trace, stats}) std::remove(p.c_str());
  return c;
}

Check criterion7() {
  Check c;
  int identical = 0, golden_match = 0, compared = 0;
  const auto cases = golden::cases();
  for (const golden::Case& gc : cases) {
    const golden::Outcome first = golden::run_case(kCli, gc);
    const golden::Outcome second = golden::run_case(kCli, gc);
    c.expect(first.exit_code == 0, gc.name + " exit");
    const bool same = first.stdout_text == second.stdout_text && first.file_text == second.file_text;
    identical += same;
    c.expect(same, gc.name + " run-to-run");
    if (!gc.stdout_golden.empty()) {
      ++compared;
      const bool ok = first.stdout_text == golden::expected(gc.stdout_golden);
      golden_match += ok;
      c.expect(ok, gc.stdout_golden);
    }
    if (!gc.file_golden.empty()) {
      ++compared;
      const bool ok = first.file_text == golden::expected(gc.file_golden);
      golden_match += ok;
      c.expect(ok, gc.file_golden);
    }
  }
  c.detail << identical << "/" << cases.size() << " cases identical across runs, " << golden_match
           << "/" << compared << " golden files match";
  return c;
}

}  // namespace

int main() {
  const std::vector<std::function<Check()>> criteria = {criterion1, criterion2, criterion3,
                                                        criterion4, criterion5, criterion6,
                                                        criterion7};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i]();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << "exception: " << e.what();
    }
    std::printf("criterion %zu: %s  %s\n", i + 1, c.ok ? "PASS" : "FAIL", c.detail.str().c_str());
    failed += !c.ok;
  }
  return failed == 0 ? 0 : 1;
}
