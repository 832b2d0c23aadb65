#include "trace.hpp"

#include <cinttypes>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include <nlohmann/json.hpp>

namespace scilib {

namespace {

using nlohmann::json;

[[noreturn]] void format_error(std::size_t line, const std::string& why) {
  throw Error(ErrorCode::TraceFormat, "trace line " + std::to_string(line) + ": " + why);
}

std::string_view source_name(TraceSource s) {
  return s == TraceSource::Recorded ? "recorded" : "synthetic";
}

std::uint64_t get_unsigned(const json& j, const char* field, std::size_t line) {
  if (!j.contains(field)) format_error(line, std::string("missing field '") + field + "'");
  const json& v = j[field];
  if (!v.is_number_unsigned())
    format_error(line, std::string("field '") + field + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::uint64_t get_address(const json& j, const char* field, std::size_t line) {
  if (!j.contains(field)) format_error(line, std::string("missing field '") + field + "'");
  const json& v = j[field];
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (!v.is_string())
    format_error(line, std::string("field '") + field + "' must be a hex address string");
  const std::string& s = v.get_ref<const std::string&>();
  std::string_view digits = s;
  if (digits.starts_with("0x") || digits.starts_with("0X")) digits.remove_prefix(2);
  std::uint64_t addr = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), addr, 16);
  if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size())
    format_error(line, std::string("field '") + field + "' is not a hex address: '" + s + "'");
  return addr;
}

char get_trans(const json& j, const char* field, std::size_t line) {
  if (!j.contains(field) || !j[field].is_string() || j[field].get_ref<const std::string&>().size() != 1)
    format_error(line, std::string("field '") + field + "' must be a one-letter string");
  return j[field].get_ref<const std::string&>()[0];
}

GemmCall parse_call(const json& j, std::size_t line) {
  if (!j.contains("routine") || !j["routine"].is_string())
    format_error(line, "missing field 'routine'");
  GemmArgs args;
  try {
    args.routine = routine_from_name(j["routine"].get_ref<const std::string&>());
    args.trans_a = trans_from_char(get_trans(j, "ta", line));
    args.trans_b = trans_from_char(get_trans(j, "tb", line));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::TraceFormat) throw;
    format_error(line, e.what());
  }
  args.m = get_unsigned(j, "m", line);
  args.n = get_unsigned(j, "n", line);
  args.k = get_unsigned(j, "k", line);
  args.lda = get_unsigned(j, "lda", line);
  args.ldb = get_unsigned(j, "ldb", line);
  args.ldc = get_unsigned(j, "ldc", line);
  args.a = get_address(j, "a", line);
  args.b = get_address(j, "b", line);
  args.c = get_address(j, "c", line);
  const std::uint64_t seq = get_unsigned(j, "seq", line);
  const std::uint64_t tid = j.contains("tid") ? get_unsigned(j, "tid", line) : 0;

  GemmCall call;
  try {
    call = make_gemm_call(args, seq, tid);
  } catch (const Error& e) {
    format_error(line, e.what());
  }
  if (j.contains("t0")) call.t_enter_ns = get_unsigned(j, "t0", line);
  if (j.contains("t1")) call.t_exit_ns = get_unsigned(j, "t1", line);
  return call;
}

}  // namespace

void Trace::validate() const {
  for (std::size_t i = 1; i < calls.size(); ++i) {
    if (calls[i].seq <= calls[i - 1].seq)
      throw Error(ErrorCode::TraceFormat,
                  "trace seq not strictly increasing at call " + std::to_string(i));
  }
}

std::size_t format_trace_line(const GemmCall& call, std::span<char> out) {
  const std::string_view routine = routine_name(call.routine);
  int n = std::snprintf(
      out.data(), out.size(),
      "{\"seq\":%" PRIu64 ",\"tid\":%" PRIu64 ",\"routine\":\"%.*s\",\"ta\":\"%c\",\"tb\":\"%c\","
      "\"m\":%" PRIu64 ",\"n\":%" PRIu64 ",\"k\":%" PRIu64 ",\"lda\":%" PRIu64 ",\"ldb\":%" PRIu64
      ",\"ldc\":%" PRIu64 ",\"a\":\"0x%" PRIx64 "\",\"b\":\"0x%" PRIx64 "\",\"c\":\"0x%" PRIx64 "\"",
      call.seq, call.thread_id, static_cast<int>(routine.size()), routine.data(),
      trans_char(call.trans_a), trans_char(call.trans_b), call.m, call.n, call.k,
      call.a().leading_dim, call.b().leading_dim, call.c().leading_dim,
      call.a().base_address, call.b().base_address, call.c().base_address);
  if (n < 0 || static_cast<std::size_t>(n) >= out.size()) return 0;
  std::size_t used = static_cast<std::size_t>(n);

  auto append_stamp = [&](const char* key, const std::optional<std::uint64_t>& v) {
    if (!v || used == 0) return;
    int m = std::snprintf(out.data() + used, out.size() - used, ",\"%s\":%" PRIu64, key, *v);
    if (m < 0 || used + static_cast<std::size_t>(m) >= out.size()) {
      used = 0;
      return;
    }
    used += static_cast<std::size_t>(m);
  };
  append_stamp("t0", call.t_enter_ns);
  append_stamp("t1", call.t_exit_ns);
  if (used == 0 || used + 1 >= out.size()) return 0;
  out[used++] = '}';
  out[used] = '\0';
  return used;
}

std::string format_trace_header(const TraceHeader& header) {
  // Fixed key order; machine tag is escaped through the JSON library.
  return "{\"trace_version\":" + std::to_string(header.version) +
         ",\"page_size\":" + std::to_string(header.page_size) + ",\"source\":\"" +
         std::string(source_name(header.source)) + "\",\"machine\":" +
         json(header.machine).dump() + "}";
}

std::string format_trace_footer(std::uint64_t calls) {
  return "{\"trace_end\":true,\"calls\":" + std::to_string(calls) + "}";
}

void write_trace(std::ostream& os, const Trace& trace) {
  os << format_trace_header(trace.header) << '\n';
  char buf[kMaxTraceLine];
  for (const GemmCall& call : trace.calls) {
    const std::size_t n = format_trace_line(call, buf);
    if (n == 0) throw Error(ErrorCode::Io, "trace line too long");
    os.write(buf, static_cast<std::streamsize>(n));
    os.put('\n');
  }
  os << format_trace_footer(trace.calls.size()) << '\n';
}

void save_trace(const std::string& path, const Trace& trace) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
  write_trace(out, trace);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

Trace read_trace(std::istream& is) {
  Trace trace;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  std::size_t footer_line = 0;

  while (std::getline(is, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    if (footer_line != 0) format_error(line, "content after trace footer");

    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) format_error(line, "not a JSON object");

    if (!have_header) {
      if (!j.contains("trace_version"))
        format_error(line, "expected header line with 'trace_version'");
      if (!j["trace_version"].is_number_integer() || j["trace_version"].get<int>() != kTraceVersion)
        format_error(line, "unsupported trace_version");
      trace.header.version = kTraceVersion;
      if (j.contains("page_size")) {
        trace.header.page_size = get_unsigned(j, "page_size", line);
        const auto ps = trace.header.page_size;
        if (ps == 0 || (ps & (ps - 1)) != 0) format_error(line, "page_size must be a power of two");
      }
      const std::string source = j.value("source", std::string("recorded"));
      if (source == "recorded") trace.header.source = TraceSource::Recorded;
      else if (source == "synthetic") trace.header.source = TraceSource::Synthetic;
      else format_error(line, "unknown source '" + source + "'");
      if (j.contains("machine") && j["machine"].is_string())
        trace.header.machine = j["machine"].get<std::string>();
      have_header = true;
      continue;
    }

    if (j.contains("trace_end")) {
      const std::uint64_t declared = get_unsigned(j, "calls", line);
      if (declared != trace.calls.size())
        format_error(line, "footer declares " + std::to_string(declared) + " calls but " +
                               std::to_string(trace.calls.size()) + " were read");
      trace.has_footer = true;
      footer_line = line;
      continue;
    }

    GemmCall call = parse_call(j, line);
    if (!trace.calls.empty() && call.seq <= trace.calls.back().seq)
      format_error(line, "seq " + std::to_string(call.seq) + " is not greater than " +
                             std::to_string(trace.calls.back().seq));
    trace.calls.push_back(call);
  }
  if (!have_header) format_error(line == 0 ? 1 : line, "empty trace (no header line)");
  return trace;
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::TraceFormat, "cannot open trace '" + path + "'");
  return read_trace(in);
}

}  // namespace scilib
