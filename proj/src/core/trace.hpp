#pragma once

// JSON Lines call traces, shared by the interposer (writer) and the
// simulator (reader).
//
//   {"trace_version":1,"page_size":4096,"source":"recorded","machine":"host"}
//   {"seq":0,"tid":1,"routine":"dgemm","ta":"T","tb":"N","m":32,...,"a":"0x..."}
//   ...
//   {"trace_end":true,"calls":N}
//
// The footer is optional on read; when present its count must match.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "model.hpp"

namespace scilib {

enum class TraceSource : std::uint8_t { Recorded, Synthetic };

struct TraceHeader {
  int version = 1;
  std::uint64_t page_size = 4096;
  TraceSource source = TraceSource::Synthetic;
  std::string machine;
};

struct Trace {
  TraceHeader header;
  std::vector<GemmCall> calls;
  bool has_footer = false;

  // Throws Error(TraceFormat) if seq is not strictly increasing.
  void validate() const;
};

inline constexpr int kTraceVersion = 1;
inline constexpr std::size_t kMaxTraceLine = 512;

// Formats one call line (no newline) into `out`. Returns the number of
// characters written, or 0 if `out` is too small. Does not allocate.
std::size_t format_trace_line(const GemmCall& call, std::span<char> out);

std::string format_trace_header(const TraceHeader& header);
std::string format_trace_footer(std::uint64_t calls);

void write_trace(std::ostream& os, const Trace& trace);
void save_trace(const std::string& path, const Trace& trace);

// Throws Error(TraceFormat) naming the line number of the first bad line.
Trace read_trace(std::istream& is);
// A missing or unreadable file is also a TraceFormat error.
Trace load_trace(const std::string& path);

}  // namespace scilib
