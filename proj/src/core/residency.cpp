#include "residency.hpp"

#include <array>
#include <string>
#include <vector>

namespace scilib {

namespace {

bool is_power_of_two(std::uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

}  // namespace

PageRange pages_for(std::uint64_t base_address, std::uint64_t length_bytes,
                    std::uint64_t page_size) {
  if (length_bytes == 0)
    throw Error(ErrorCode::EmptyRegion, "region of length 0 has no pages");
  if (!is_power_of_two(page_size))
    throw Error(ErrorCode::InvalidArgument,
                "page size " + std::to_string(page_size) + " is not a power of two");
  return PageRange{base_address / page_size,
                   (base_address + length_bytes - 1) / page_size};
}

PageRange pages_for(const MatrixOperand& op, std::uint64_t page_size) {
  return pages_for(op.base_address, region_bytes(op), page_size);
}

ResidencyRegistry::ResidencyRegistry(std::uint64_t page_size,
                                     std::uint64_t capacity_bytes)
    : page_size_(page_size), capacity_(capacity_bytes) {
  if (!is_power_of_two(page_size))
    throw Error(ErrorCode::InvalidArgument,
                "page size " + std::to_string(page_size) + " is not a power of two");
  if (capacity_bytes == 0)
    throw Error(ErrorCode::InvalidArgument, "device capacity must be positive");
}

MigrationAction ResidencyRegistry::touch_ranges_locked(
    std::span<const PageRange> ranges) {
  detail::IntervalSet wanted;
  for (const PageRange& r : ranges) wanted.insert(r.first_page, r.last_page);

  std::uint64_t missing = 0;
  wanted.for_each_run([&](std::uint64_t first, std::uint64_t last) {
    missing += (last - first + 1) - resident_.count_present(first, last);
  });

  const std::uint64_t needed = missing * page_size_;
  if (missing > 0 && resident_.size() * page_size_ + needed > capacity_)
    return MigrationAction::denied(needed);

  wanted.for_each_run([&](std::uint64_t first, std::uint64_t last) {
    resident_.insert(first, last);
  });
  for (const PageRange& r : ranges) touches_.increment(r.first_page, r.last_page);

  if (missing == 0) return MigrationAction::already_resident();
  bytes_migrated_total_ += needed;
  return MigrationAction::migrated(missing, page_size_);
}

MigrationAction ResidencyRegistry::touch(PageRange range) {
  std::lock_guard lock(mu_);
  return touch_ranges_locked(std::span(&range, 1));
}

MigrationAction ResidencyRegistry::touch(const MatrixOperand& op) {
  return touch(pages_for(op, page_size_));
}

MigrationAction ResidencyRegistry::touch_all(std::span<const MatrixOperand> ops) {
  std::array<PageRange, 3> small{};
  std::vector<PageRange> large;
  std::span<PageRange> ranges;
  if (ops.size() <= small.size()) {
    ranges = std::span(small.data(), ops.size());
  } else {
    large.resize(ops.size());
    ranges = large;
  }
  for (std::size_t i = 0; i < ops.size(); ++i) ranges[i] = pages_for(ops[i], page_size_);

  std::lock_guard lock(mu_);
  return touch_ranges_locked(ranges);
}

std::uint64_t ResidencyRegistry::evict(PageRange range) {
  std::lock_guard lock(mu_);
  return resident_.erase(range.first_page, range.last_page) * page_size_;
}

ReuseStats ResidencyRegistry::reuse_stats() const {
  std::lock_guard lock(mu_);
  const auto summary = touches_.summarize();
  ReuseStats stats;
  stats.migrated_bytes = bytes_migrated_total_;
  stats.touched_pages = summary.touched_indices;
  stats.max_touches = summary.max_count;
  stats.mean_touches_per_page =
      summary.touched_indices == 0
          ? 0.0
          : static_cast<double>(summary.total_count) /
                static_cast<double>(summary.touched_indices);
  stats.resident_bytes = resident_.size() * page_size_;
  return stats;
}

bool ResidencyRegistry::is_resident(std::uint64_t page) const {
  std::lock_guard lock(mu_);
  return resident_.contains(page);
}

std::uint64_t ResidencyRegistry::touch_count(std::uint64_t page) const {
  std::lock_guard lock(mu_);
  return touches_.count_at(page);
}

std::uint64_t ResidencyRegistry::resident_bytes() const {
  std::lock_guard lock(mu_);
  return resident_.size() * page_size_;
}

std::uint64_t ResidencyRegistry::bytes_migrated_total() const {
  std::lock_guard lock(mu_);
  return bytes_migrated_total_;
}

}  // namespace scilib
