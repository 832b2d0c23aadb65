#include <doctest.h>

#include <random>
#include <set>

#include "core/replay.hpp"
#include "support/oracles.hpp"

using namespace scilib;

namespace {

SyntheticSpec reference_spec(std::uint64_t matrices, std::uint64_t reuse) {
  SyntheticSpec s;
  s.n_matrices = matrices;
  s.reuse_factor = reuse;
  s.m = 32;
  s.n = 2400;
  s.k = 93536;
  s.elem_size = 8;
  s.seed = 1;
  return s;
}

const Strategy kS1 = Strategy::copy_per_call();
const Strategy kS2H = Strategy::unified_access(Residence::HostMemory);
const Strategy kS2D = Strategy::unified_access(Residence::DeviceMemory);
const Strategy kS3 = Strategy::first_touch_migrate();

constexpr std::uint64_t kS1Bytes = 1821065216ull;
constexpr std::uint64_t kS3Bytes = 1820450816ull;

// Mixed trace of random shapes, some below threshold, operands drawn from a
// small pool so pages are shared between calls.
Trace random_trace(std::uint64_t seed, int calls) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> logdim(0.0, std::log(4000.0));
  std::vector<std::uint64_t> pool;
  for (int i = 0; i < 12; ++i) pool.push_back(0x100000000ull + (rng() % 4096) * 4096 * 64);
  Trace t;
  for (int i = 0; i < calls; ++i) {
    GemmArgs a;
    a.routine = kAllRoutines[rng() % 4];
    a.trans_a = (rng() & 1) ? Trans::T : Trans::N;
    a.trans_b = (rng() & 1) ? Trans::T : Trans::N;
    a.m = 1 + static_cast<std::uint64_t>(std::exp(logdim(rng)));
    a.n = 1 + static_cast<std::uint64_t>(std::exp(logdim(rng)));
    a.k = 1 + static_cast<std::uint64_t>(std::exp(logdim(rng)));
    a.lda = a.trans_a == Trans::N ? a.m : a.k;
    a.ldb = a.trans_b == Trans::N ? a.k : a.n;
    a.ldc = a.m;
    a.a = pool[rng() % pool.size()] + (rng() % 64) * 8;
    a.b = pool[rng() % pool.size()];
    a.c = pool[rng() % pool.size()] + 4096 * 7;
    t.calls.push_back(make_gemm_call(a, static_cast<std::uint64_t>(i), 0));
  }
  return t;
}

}  // namespace

TEST_CASE("replay examples on gh200") {
  const Trace one = gen_synthetic(reference_spec(1, 1));
  const OffloadConfig cfg;
  const HardwareProfile gh = gh200_profile();

  const ReplayReport s1 = replay(one, kS1, gh, cfg);
  CHECK(s1.totals.wall_s * 1e3 == doctest::Approx(5.4618).epsilon(1e-4));
  CHECK(s1.totals.transfer_s * 1e3 == doctest::Approx(4.9218).epsilon(1e-4));
  CHECK(s1.totals.bytes_moved == kS1Bytes);
  CHECK(s1.totals.calls_offloaded == 1);

  OffloadConfig high = cfg;
  high.threshold = 1e6;
  const ReplayReport host = replay(one, kS1, gh, high);
  CHECK(host.totals.wall_s * 1e3 == doctest::Approx(19.7).epsilon(1e-6));
  CHECK(host.totals.calls_host == 1);
  CHECK(host.per_call[0].decision == Decision::host(Reason::BelowThreshold));
  CHECK(host.totals.bytes_moved == 0);

  const ReplayReport s2d = replay(one, kS2D, gh, cfg);
  CHECK(s2d.totals.kernel_s * 1e3 == doctest::Approx(0.84).epsilon(1e-6));
  CHECK(s2d.totals.wall_s * 1e3 == doctest::Approx(0.86).epsilon(1e-6));

  const ReplayReport s3 = replay(one, kS3, gh, cfg);
  CHECK(s3.totals.bytes_moved == kS3Bytes);
  CHECK(s3.totals.wall_s * 1e3 == doctest::Approx(5.78).epsilon(1e-3));
  CHECK(s3.reuse.migrated_bytes == kS3Bytes);
}

TEST_CASE("h100_pcie copy transfer") {
  const Trace one = gen_synthetic(reference_spec(1, 1));
  const ReplayReport r = replay(one, kS1, h100_pcie_profile(), OffloadConfig{});
  CHECK(r.totals.transfer_s * 1e3 == doctest::Approx(28.4541).epsilon(1e-4));
}

TEST_CASE("empty trace gives zero totals") {
  const Trace empty;
  for (const Strategy& s : {kS1, kS2H, kS2D, kS3}) {
    const ReplayReport r = replay(empty, s, gh200_profile(), OffloadConfig{});
    CHECK(r.totals.wall_s == 0.0);
    CHECK(r.totals.bytes_moved == 0);
    CHECK(r.totals.calls_offloaded + r.totals.calls_host == 0);
    CHECK(r.per_call.empty());
    CHECK(r.reuse.mean_touches_per_page == 0.0);
  }
}

TEST_CASE("replay totals are the sums of per-call costs") {
  const HardwareProfile gh = gh200_profile();
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const Trace t = random_trace(seed, 300);
    OffloadConfig cfg;
    cfg.threshold = 100.0 * static_cast<double>(seed);
    for (const Strategy& s : {kS1, kS2H, kS2D, kS3}) {
      const ReplayReport r = replay(t, s, gh, cfg);
      REQUIRE(r.per_call.size() == t.calls.size());
      double wall = 0, kernel = 0, transfer = 0, migration = 0, other = 0;
      std::uint64_t bytes = 0, offloaded = 0;
      for (std::size_t i = 0; i < t.calls.size(); ++i) {
        const CallRecord& rec = r.per_call[i];
        CHECK(rec.seq == t.calls[i].seq);
        wall += rec.cost.total();
        kernel += rec.cost.kernel_s;
        transfer += rec.cost.transfer_s;
        migration += rec.cost.migration_s;
        other += rec.cost.other_s;
        bytes += rec.cost.bytes_moved;
        offloaded += rec.decision.offloaded();

        // Offloaded calls run on the GPU and host calls move no data.
        const GemmCall& c = t.calls[i];
        const bool expect = oracle::exceeds_cube(c.m, c.n, c.k, static_cast<std::uint64_t>(cfg.threshold));
        CHECK(rec.decision.offloaded() == expect);
        CHECK((rec.cost.executed_on == Processor::GPU) == rec.decision.offloaded());
        if (!rec.decision.offloaded()) CHECK(rec.cost.bytes_moved == 0);
      }
      CHECK(r.totals.wall_s == wall);
      CHECK(r.totals.kernel_s == kernel);
      CHECK(r.totals.transfer_s == transfer);
      CHECK(r.totals.migration_s == migration);
      CHECK(r.totals.other_s == other);
      CHECK(r.totals.bytes_moved == bytes);
      CHECK(r.totals.calls_offloaded == offloaded);
      CHECK(r.totals.calls_offloaded + r.totals.calls_host == t.calls.size());
      if (s == kS3) CHECK(r.totals.bytes_moved == r.reuse.migrated_bytes);
      if (s == kS2H || s == kS2D) CHECK(r.totals.bytes_moved == 0);
    }
  }
}

TEST_CASE("replay is deterministic") {
  const Trace t = random_trace(42, 200);
  const ReplayReport a = replay(t, kS3, gh200_profile(), OffloadConfig{});
  const ReplayReport b = replay(t, kS3, gh200_profile(), OffloadConfig{});
  CHECK(report_to_json(a).dump() == report_to_json(b).dump());
}

TEST_CASE("first-touch bytes never exceed copy-per-call bytes on synthetic traces") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    SyntheticSpec s;
    s.n_matrices = 1 + rng() % 8;
    s.reuse_factor = 1 + rng() % 20;
    s.m = 1 + rng() % 3000;
    s.n = 1 + rng() % 3000;
    s.k = 1 + rng() % 3000;
    s.elem_size = std::array<std::uint32_t, 3>{4, 8, 16}[rng() % 3];
    s.trans_a = (rng() & 1) ? Trans::T : Trans::N;
    s.trans_b = (rng() & 1) ? Trans::T : Trans::N;
    s.seed = rng();
    const Trace t = gen_synthetic(s);
    OffloadConfig cfg;
    cfg.threshold = 0.5;
    const ReplayReport r1 = replay(t, kS1, gh200_profile(), cfg);
    const ReplayReport r3 = replay(t, kS3, gh200_profile(), cfg);
    // Page rounding can add at most three partial pages per operand set.
    CHECK(r3.totals.bytes_moved <= r1.totals.bytes_moved + 3 * s.page_size * s.n_matrices);
    // Each operand set migrates exactly once.
    std::uint64_t expected = 0;
    for (const MatrixOperand& op : t.calls[0].operands)
      expected += pages_for(op.base_address, region_bytes(op), s.page_size).count() * s.page_size;
    CHECK(r3.totals.bytes_moved == expected * s.n_matrices);
  }
}

TEST_CASE("compare") {
  const Trace t = gen_synthetic(reference_spec(1, 446));
  const HardwareProfile gh = gh200_profile();
  const OffloadConfig cfg;

  const std::vector<Strategy> one = {kS3};
  const Comparison single = compare(t, one, gh, cfg);
  REQUIRE(single.reports.size() == 1);
  CHECK(single.speedups[0] == 1.0);

  const std::vector<Strategy> same = {kS1, kS1};
  const Comparison twice = compare(t, same, gh, cfg);
  CHECK(twice.speedups[1] == 1.0);
  CHECK(twice.reports[0].totals.wall_s == twice.reports[1].totals.wall_s);

  const std::vector<Strategy> all = {kS1, kS2H, kS2D, kS3};
  const Comparison cmp = compare(t, all, gh, cfg);
  const double w1 = cmp.reports[0].totals.wall_s;
  const double w2d = cmp.reports[2].totals.wall_s;
  const double w3 = cmp.reports[3].totals.wall_s;
  CHECK(w3 < w1);
  CHECK(w2d < w3);
  CHECK(cmp.speedups[3] == doctest::Approx(w1 / w3));
  CHECK(cmp.reports[0].totals.bytes_moved == 446 * kS1Bytes);
  CHECK(cmp.reports[3].totals.bytes_moved == kS3Bytes);
  CHECK(cmp.reports[3].reuse.mean_touches_per_page == doctest::Approx(446.0));

  const nlohmann::json j = comparison_to_json(cmp);
  CHECK(j["rows"].size() == 4);
  CHECK(j["rows"][3]["strategy"] == "3");
  CHECK(comparison_to_text(cmp).find("2D") != std::string::npos);

  const std::vector<Strategy> none;
  CHECK_THROWS_AS(compare(t, none, gh, cfg), Error);
}

TEST_CASE("gen_synthetic layout and determinism") {
  const Trace t = gen_synthetic(reference_spec(4, 5));
  REQUIRE(t.calls.size() == 20);
  CHECK(t.header.source == TraceSource::Synthetic);
  std::map<std::uint64_t, int> uses;
  std::set<std::uint64_t> bases;
  for (std::size_t i = 0; i < t.calls.size(); ++i) {
    const GemmCall& c = t.calls[i];
    CHECK(c.seq == i);
    CHECK(c.routine == Routine::Dgemm);
    for (const MatrixOperand& op : c.operands) {
      CHECK(op.base_address % 4096 == 0);
      bases.insert(op.base_address);
    }
    ++uses[c.a().base_address];
  }
  CHECK(bases.size() == 12);
  for (const auto& [base, n] : uses) CHECK(n == 5);

  // Operand regions are pairwise disjoint.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> spans;
  std::set<std::uint64_t> seen;
  for (const GemmCall& c : t.calls)
    for (const MatrixOperand& op : c.operands)
      if (seen.insert(op.base_address).second)
        spans.emplace_back(op.base_address, op.base_address + region_bytes(op));
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) CHECK(spans[i - 1].second <= spans[i].first);

  std::ostringstream a, b, c;
  write_trace(a, gen_synthetic(reference_spec(4, 5)));
  write_trace(b, t);
  CHECK(a.str() == b.str());
  SyntheticSpec other = reference_spec(4, 5);
  other.seed = 2;
  write_trace(c, gen_synthetic(other));
  CHECK(c.str() != a.str());

  SyntheticSpec z = reference_spec(1, 1);
  z.elem_size = 16;
  CHECK(gen_synthetic(z).calls[0].routine == Routine::Zgemm);
  z.routine = Routine::Cgemm;
  CHECK_THROWS_AS(gen_synthetic(z), Error);
  z.elem_size = 8;
  CHECK(gen_synthetic(z).calls[0].routine == Routine::Cgemm);
}

TEST_CASE("gen_synthetic rejects bad specs") {
  auto spec_error = [](SyntheticSpec s) {
    try {
      gen_synthetic(s);
    } catch (const Error& e) {
      return e.code() == ErrorCode::SpecError;
    }
    return false;
  };
  SyntheticSpec s = reference_spec(1, 1);
  s.n_matrices = 0;
  CHECK(spec_error(s));
  s = reference_spec(1, 0);
  CHECK(spec_error(s));
  s = reference_spec(1, 1);
  s.m = 0;
  CHECK(spec_error(s));
  s = reference_spec(1, 1);
  s.elem_size = 6;
  CHECK(spec_error(s));
  s = reference_spec(1, 1);
  s.page_size = 1000;
  CHECK(spec_error(s));
  s = reference_spec(1, 1);
  s.k = 1ull << 33;
  CHECK(spec_error(s));
  s = reference_spec(100000, 1);
  CHECK(spec_error(s));  // address budget
  s = reference_spec(1ull << 20, 1ull << 20);
  CHECK(spec_error(s));  // call count
}

TEST_CASE("replay uses the configured page size") {
  const Trace t = gen_synthetic(reference_spec(1, 1));
  OffloadConfig cfg;
  cfg.page_size = 65536;
  const ReplayReport r = replay(t, kS3, gh200_profile(), cfg);
  CHECK(r.page_size == 65536);
  CHECK(r.totals.bytes_moved % 65536 == 0);
  CHECK(r.totals.bytes_moved >= kS3Bytes);
}
