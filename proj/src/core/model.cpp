#include "model.hpp"

#include <cctype>
#include <string>

namespace scilib {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnknownRoutine: return "UnknownRoutine";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::EmptyRegion: return "EmptyRegion";
    case ErrorCode::TraceFormat: return "TraceFormat";
    case ErrorCode::UnknownProfile: return "UnknownProfile";
    case ErrorCode::SpecError: return "SpecError";
    case ErrorCode::Underdetermined: return "Underdetermined";
    case ErrorCode::Io: return "Io";
    case ErrorCode::SymbolNotFound: return "SymbolNotFound";
  }
  return "Unknown";
}

std::string_view routine_name(Routine r) {
  switch (r) {
    case Routine::Sgemm: return "sgemm";
    case Routine::Dgemm: return "dgemm";
    case Routine::Cgemm: return "cgemm";
    case Routine::Zgemm: return "zgemm";
  }
  throw Error(ErrorCode::UnknownRoutine,
              "unknown routine id " + std::to_string(static_cast<int>(r)));
}

Routine routine_from_name(std::string_view name) {
  std::string lower;
  lower.reserve(name.size());
  for (char ch : name)
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (!lower.empty() && lower.back() == '_') lower.pop_back();
  for (Routine r : kAllRoutines)
    if (routine_name(r) == lower) return r;
  throw Error(ErrorCode::UnknownRoutine,
              "unknown routine '" + std::string(name) + "'");
}

std::uint32_t routine_elem_size(Routine r) {
  switch (r) {
    case Routine::Sgemm: return 4;
    case Routine::Dgemm: return 8;
    case Routine::Cgemm: return 8;
    case Routine::Zgemm: return 16;
  }
  throw Error(ErrorCode::UnknownRoutine,
              "unknown routine id " + std::to_string(static_cast<int>(r)));
}

bool routine_is_complex(Routine r) {
  switch (r) {
    case Routine::Sgemm:
    case Routine::Dgemm: return false;
    case Routine::Cgemm:
    case Routine::Zgemm: return true;
  }
  throw Error(ErrorCode::UnknownRoutine,
              "unknown routine id " + std::to_string(static_cast<int>(r)));
}

Trans trans_from_char(char c) {
  switch (std::toupper(static_cast<unsigned char>(c))) {
    case 'N': return Trans::N;
    case 'T': return Trans::T;
    case 'C': return Trans::C;
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument,
              std::string("invalid transpose flag '") + c + "'");
}

MatrixOperand MatrixOperand::make(std::uint64_t base, std::uint64_t rows,
                                  std::uint64_t cols, std::uint64_t leading_dim,
                                  std::uint32_t elem_size, OperandRole role) {
  if (rows < 1 || cols < 1)
    throw Error(ErrorCode::InvalidArgument, "operand dims must be >= 1");
  if (leading_dim < rows)
    throw Error(ErrorCode::InvalidArgument,
                "leading dimension " + std::to_string(leading_dim) +
                    " is smaller than row count " + std::to_string(rows));
  if (elem_size != 4 && elem_size != 8 && elem_size != 16)
    throw Error(ErrorCode::InvalidArgument,
                "element size must be 4, 8 or 16 bytes");
  const unsigned __int128 extent =
      (static_cast<unsigned __int128>(cols - 1) * leading_dim + rows) * elem_size;
  if (base + extent > (static_cast<unsigned __int128>(1) << 64))
    throw Error(ErrorCode::InvalidArgument, "operand extends past the end of the address space");
  return MatrixOperand{base, rows, cols, leading_dim, elem_size, role};
}

std::uint64_t region_bytes(const MatrixOperand& op) {
  return ((op.cols - 1) * op.leading_dim + op.rows) * op.elem_size;
}

GemmCall make_gemm_call(const GemmArgs& args, std::uint64_t seq,
                        std::uint64_t thread_id) {
  if (args.m < 1 || args.n < 1 || args.k < 1)
    throw Error(ErrorCode::InvalidArgument, "gemm dims m, n, k must be >= 1");
  const std::uint32_t elem = routine_elem_size(args.routine);

  const bool a_plain = args.trans_a == Trans::N;
  const bool b_plain = args.trans_b == Trans::N;

  GemmCall call;
  call.seq = seq;
  call.routine = args.routine;
  call.trans_a = args.trans_a;
  call.trans_b = args.trans_b;
  call.m = args.m;
  call.n = args.n;
  call.k = args.k;
  call.thread_id = thread_id;
  call.operands[0] = MatrixOperand::make(args.a, a_plain ? args.m : args.k,
                                         a_plain ? args.k : args.m, args.lda,
                                         elem, OperandRole::A);
  call.operands[1] = MatrixOperand::make(args.b, b_plain ? args.k : args.n,
                                         b_plain ? args.n : args.k, args.ldb,
                                         elem, OperandRole::B);
  call.operands[2] = MatrixOperand::make(args.c, args.m, args.n, args.ldc, elem,
                                         OperandRole::C);
  return call;
}

double flop_count(Routine r, std::uint64_t m, std::uint64_t n,
                  std::uint64_t k) {
  const double factor = routine_is_complex(r) ? 8.0 : 2.0;
  return factor * static_cast<double>(m) * static_cast<double>(n) *
         static_cast<double>(k);
}

double flop_count(const GemmCall& call) {
  return flop_count(call.routine, call.m, call.n, call.k);
}

std::optional<Strategy> Strategy::from_code(std::string_view code) {
  if (code == "1") return copy_per_call();
  if (code == "2H" || code == "2h" || code == "2L" || code == "2l")
    return unified_access(Residence::HostMemory);
  if (code == "2D" || code == "2d") return unified_access(Residence::DeviceMemory);
  if (code == "3") return first_touch_migrate();
  return std::nullopt;
}

std::string_view Strategy::code() const {
  switch (kind_) {
    case Kind::CopyPerCall: return "1";
    case Kind::UnifiedAccess:
      return *residence_ == Residence::HostMemory ? "2H" : "2D";
    case Kind::FirstTouchMigrate: return "3";
  }
  return "?";
}

std::string_view verdict_name(Verdict v) {
  return v == Verdict::Offload ? "Offload" : "Host";
}

std::string_view reason_name(Reason r) {
  switch (r) {
    case Reason::BelowThreshold: return "BelowThreshold";
    case Reason::RoutineDisabled: return "RoutineDisabled";
    case Reason::Offloaded: return "Offloaded";
    case Reason::CapacityExceeded: return "CapacityExceeded";
  }
  return "?";
}

Decision Decision::host(Reason why) {
  if (why == Reason::Offloaded)
    throw Error(ErrorCode::InvalidArgument,
                "a host decision cannot carry reason Offloaded");
  return Decision(Verdict::Host, why);
}

}  // namespace scilib
