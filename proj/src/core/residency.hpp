#pragma once

#include <cstdint>
#include <mutex>
#include <span>

#include "interval_map.hpp"
#include "model.hpp"

namespace scilib {

struct PageRange {
  std::uint64_t first_page = 0;
  std::uint64_t last_page = 0;  // inclusive

  std::uint64_t count() const { return last_page - first_page + 1; }
  friend bool operator==(const PageRange&, const PageRange&) = default;
};

// first = floor(base / page), last = floor((base + length - 1) / page).
// Throws EmptyRegion for length 0 and InvalidArgument for a page size that
// is not a power of two.
PageRange pages_for(std::uint64_t base_address, std::uint64_t length_bytes,
                    std::uint64_t page_size);

PageRange pages_for(const MatrixOperand& op, std::uint64_t page_size);

struct MigrationAction {
  enum class Kind : std::uint8_t { Migrated, AlreadyResident, Denied };

  Kind kind = Kind::AlreadyResident;
  std::uint64_t new_pages = 0;
  std::uint64_t bytes = 0;  // bytes migrated, or bytes needed when Denied

  static MigrationAction migrated(std::uint64_t pages, std::uint64_t page_size) {
    return {Kind::Migrated, pages, pages * page_size};
  }
  static MigrationAction already_resident() { return {}; }
  static MigrationAction denied(std::uint64_t needed) {
    return {Kind::Denied, 0, needed};
  }

  friend bool operator==(const MigrationAction&, const MigrationAction&) = default;
};

struct ReuseStats {
  std::uint64_t migrated_bytes = 0;
  double mean_touches_per_page = 0.0;  // over pages touched at least once
  std::uint64_t max_touches = 0;
  std::uint64_t touched_pages = 0;
  std::uint64_t resident_bytes = 0;
};

// First-touch residency map. A region's pages become device-resident the
// first time an offloaded call uses them and stay resident until evicted.
// All member functions lock; the registry is safe to share across threads.
class ResidencyRegistry {
 public:
  ResidencyRegistry(std::uint64_t page_size, std::uint64_t capacity_bytes);

  ResidencyRegistry(const ResidencyRegistry&) = delete;
  ResidencyRegistry& operator=(const ResidencyRegistry&) = delete;

  MigrationAction touch(const MatrixOperand& op);
  MigrationAction touch(PageRange range);

  // Touches several operands as one atomic step: either every missing page
  // of their union migrates, or nothing changes and Denied is returned.
  // Pages shared between the operands are migrated once.
  MigrationAction touch_all(std::span<const MatrixOperand> ops);

  // Drops residency, keeps touch counts. Returns bytes released.
  std::uint64_t evict(PageRange range);

  ReuseStats reuse_stats() const;

  bool is_resident(std::uint64_t page) const;
  std::uint64_t touch_count(std::uint64_t page) const;
  std::uint64_t resident_bytes() const;
  std::uint64_t bytes_migrated_total() const;

  std::uint64_t page_size() const { return page_size_; }
  std::uint64_t capacity() const { return capacity_; }

 private:
  MigrationAction touch_ranges_locked(std::span<const PageRange> ranges);

  const std::uint64_t page_size_;
  const std::uint64_t capacity_;
  mutable std::mutex mu_;
  detail::IntervalSet resident_;
  detail::IntervalCounter touches_;
  std::uint64_t bytes_migrated_total_ = 0;
};

}  // namespace scilib
