#pragma once

// Page-index interval containers backing the residency registry. A 1.8 GB
// operand is ~440k pages; keeping runs instead of single pages makes a touch
// O(log runs) regardless of operand size.

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <map>

namespace scilib::detail {

// Set of page indices stored as disjoint, non-adjacent closed runs.
class IntervalSet {
 public:
  // Number of indices in [first, last] that are present.
  std::uint64_t count_present(std::uint64_t first, std::uint64_t last) const {
    std::uint64_t present = 0;
    auto it = runs_.upper_bound(first);
    if (it != runs_.begin()) --it;
    for (; it != runs_.end() && it->first <= last; ++it) {
      const std::uint64_t lo = std::max(it->first, first);
      const std::uint64_t hi = std::min(it->second, last);
      if (lo <= hi) present += hi - lo + 1;
    }
    return present;
  }

  bool contains(std::uint64_t index) const {
    auto it = runs_.upper_bound(index);
    if (it == runs_.begin()) return false;
    --it;
    return index <= it->second;
  }

  // Returns the number of indices newly added.
  std::uint64_t insert(std::uint64_t first, std::uint64_t last) {
    const std::uint64_t added = (last - first + 1) - count_present(first, last);
    std::uint64_t lo = first;
    std::uint64_t hi = last;
    auto it = runs_.upper_bound(first);
    if (it != runs_.begin()) {
      auto prev = std::prev(it);
      if (prev->second + 1 >= first) it = prev;  // overlaps or abuts
    }
    while (it != runs_.end() && (last == UINT64_MAX || it->first <= last + 1)) {
      lo = std::min(lo, it->first);
      hi = std::max(hi, it->second);
      it = runs_.erase(it);
    }
    runs_.emplace(lo, hi);
    size_ += added;
    return added;
  }

  // Returns the number of indices removed.
  std::uint64_t erase(std::uint64_t first, std::uint64_t last) {
    std::uint64_t removed = 0;
    auto it = runs_.upper_bound(first);
    if (it != runs_.begin()) --it;
    while (it != runs_.end() && it->first <= last) {
      const std::uint64_t run_lo = it->first;
      const std::uint64_t run_hi = it->second;
      if (run_hi < first) {
        ++it;
        continue;
      }
      const std::uint64_t lo = std::max(run_lo, first);
      const std::uint64_t hi = std::min(run_hi, last);
      removed += hi - lo + 1;
      it = runs_.erase(it);
      if (run_lo < lo) runs_.emplace(run_lo, lo - 1);
      if (hi < run_hi) it = runs_.emplace(hi + 1, run_hi).first;
    }
    size_ -= removed;
    return removed;
  }

  template <class Fn>
  void for_each_run(Fn&& fn) const {
    for (const auto& [first, last] : runs_) fn(first, last);
  }

  std::uint64_t size() const { return size_; }
  std::size_t run_count() const { return runs_.size(); }

 private:
  std::map<std::uint64_t, std::uint64_t> runs_;  // first -> last
  std::uint64_t size_ = 0;
};

// Piecewise-constant counter over page indices. Only indices with a count of
// at least one are stored.
class IntervalCounter {
 public:
  void increment(std::uint64_t first, std::uint64_t last) {
    split_at(first);
    if (last != UINT64_MAX) split_at(last + 1);

    std::uint64_t cursor = first;
    auto it = segments_.lower_bound(first);
    while (cursor <= last) {
      if (it == segments_.end() || it->first > cursor) {
        // Gap [cursor, gap_end] with implicit count zero.
        const std::uint64_t gap_end =
            (it == segments_.end()) ? last : std::min(last, it->first - 1);
        segments_.emplace_hint(it, cursor, Segment{gap_end, 1});
        if (gap_end == last) break;
        cursor = gap_end + 1;
        continue;
      }
      ++it->second.count;
      if (it->second.last == last) break;
      cursor = it->second.last + 1;
      ++it;
    }
    coalesce_around(first, last);
  }

  std::uint64_t count_at(std::uint64_t index) const {
    auto it = segments_.upper_bound(index);
    if (it == segments_.begin()) return 0;
    --it;
    return index <= it->second.last ? it->second.count : 0;
  }

  struct Summary {
    std::uint64_t touched_indices = 0;  // indices with count >= 1
    std::uint64_t total_count = 0;      // sum of counts over indices
    std::uint64_t max_count = 0;
  };

  Summary summarize() const {
    Summary s;
    for (const auto& [first, seg] : segments_) {
      const std::uint64_t len = seg.last - first + 1;
      s.touched_indices += len;
      s.total_count += len * seg.count;
      s.max_count = std::max(s.max_count, seg.count);
    }
    return s;
  }

  std::size_t segment_count() const { return segments_.size(); }

 private:
  struct Segment {
    std::uint64_t last;
    std::uint64_t count;
  };

  void split_at(std::uint64_t index) {
    auto it = segments_.upper_bound(index);
    if (it == segments_.begin()) return;
    --it;
    if (it->first < index && index <= it->second.last) {
      const Segment tail{it->second.last, it->second.count};
      it->second.last = index - 1;
      segments_.emplace_hint(std::next(it), index, tail);
    }
  }

  void coalesce_around(std::uint64_t first, std::uint64_t last) {
    auto it = segments_.lower_bound(first);
    if (it != segments_.begin()) --it;
    while (it != segments_.end()) {
      auto next = std::next(it);
      if (next == segments_.end()) break;
      if (it->first > last) break;
      if (it->second.last + 1 == next->first &&
          it->second.count == next->second.count) {
        it->second.last = next->second.last;
        segments_.erase(next);
      } else {
        it = next;
      }
    }
  }

  std::map<std::uint64_t, Segment> segments_;  // first -> {last, count}
};

}  // namespace scilib::detail
