#pragma once

// Domain types shared by the policy, residency, cost model, replay and shim
// layers. Everything here is a plain value type.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "error.hpp"

namespace scilib {

enum class Routine : std::uint8_t { Sgemm, Dgemm, Cgemm, Zgemm };

inline constexpr std::array<Routine, 4> kAllRoutines = {
    Routine::Sgemm, Routine::Dgemm, Routine::Cgemm, Routine::Zgemm};

std::string_view routine_name(Routine r);

// Accepts "dgemm", "DGEMM" and the Fortran-mangled "dgemm_".
Routine routine_from_name(std::string_view name);

std::uint32_t routine_elem_size(Routine r);
bool routine_is_complex(Routine r);

enum class Trans : char { N = 'N', T = 'T', C = 'C' };

Trans trans_from_char(char c);
inline char trans_char(Trans t) { return static_cast<char>(t); }

enum class OperandRole : std::uint8_t { A, B, C };

// Column-major operand geometry. `base_address` is opaque: only the shim
// binds it to live memory.
struct MatrixOperand {
  std::uint64_t base_address = 0;
  std::uint64_t rows = 1;
  std::uint64_t cols = 1;
  std::uint64_t leading_dim = 1;
  std::uint32_t elem_size = 8;
  OperandRole role = OperandRole::A;

  // Throws Error(InvalidArgument) unless rows, cols >= 1,
  // leading_dim >= rows and elem_size is 4, 8 or 16.
  static MatrixOperand make(std::uint64_t base, std::uint64_t rows,
                            std::uint64_t cols, std::uint64_t leading_dim,
                            std::uint32_t elem_size, OperandRole role);
};

// ((cols - 1) * leading_dim + rows) * elem_size: the full address extent,
// leading-dimension padding included.
std::uint64_t region_bytes(const MatrixOperand& op);

struct GemmCall {
  std::uint64_t seq = 0;
  Routine routine = Routine::Dgemm;
  Trans trans_a = Trans::N;
  Trans trans_b = Trans::N;
  std::uint64_t m = 1;
  std::uint64_t n = 1;
  std::uint64_t k = 1;
  std::array<MatrixOperand, 3> operands{};
  std::uint64_t thread_id = 0;
  std::optional<std::uint64_t> t_enter_ns;
  std::optional<std::uint64_t> t_exit_ns;

  const MatrixOperand& a() const { return operands[0]; }
  const MatrixOperand& b() const { return operands[1]; }
  const MatrixOperand& c() const { return operands[2]; }
};

struct GemmArgs {
  Routine routine = Routine::Dgemm;
  Trans trans_a = Trans::N;
  Trans trans_b = Trans::N;
  std::uint64_t m = 1, n = 1, k = 1;
  std::uint64_t a = 0, lda = 1;
  std::uint64_t b = 0, ldb = 1;
  std::uint64_t c = 0, ldc = 1;
};

// Builds the three operands from BLAS-style arguments. op(A) is m x k, so
// A is stored m x k for trans_a = N and k x m otherwise; likewise for B.
// Throws Error(InvalidArgument) on zero dims or short leading dimensions.
GemmCall make_gemm_call(const GemmArgs& args, std::uint64_t seq = 0,
                        std::uint64_t thread_id = 0);

// 2mnk for real routines, 8mnk for complex. Returned as double because
// m*n*k of three 32-bit dims does not fit in 64 bits.
double flop_count(const GemmCall& call);
double flop_count(Routine r, std::uint64_t m, std::uint64_t n,
                  std::uint64_t k);

enum class Residence : std::uint8_t { HostMemory, DeviceMemory };

// One of the three data-management strategies. A residence only exists for
// UnifiedAccess, which the factory functions guarantee.
class Strategy {
 public:
  enum class Kind : std::uint8_t { CopyPerCall, UnifiedAccess, FirstTouchMigrate };

  static Strategy copy_per_call() { return Strategy(Kind::CopyPerCall, {}); }
  static Strategy unified_access(Residence r) {
    return Strategy(Kind::UnifiedAccess, r);
  }
  static Strategy first_touch_migrate() {
    return Strategy(Kind::FirstTouchMigrate, {});
  }

  // Codes: "1", "2H" (unified, host-resident), "2D" (unified,
  // device-resident), "3". "2L" is accepted as an alias of "2H".
  static std::optional<Strategy> from_code(std::string_view code);
  std::string_view code() const;

  Kind kind() const { return kind_; }
  std::optional<Residence> residence() const { return residence_; }

  friend bool operator==(const Strategy&, const Strategy&) = default;

 private:
  Strategy(Kind k, std::optional<Residence> r) : kind_(k), residence_(r) {}

  Kind kind_;
  std::optional<Residence> residence_;
};

enum class Verdict : std::uint8_t { Offload, Host };
enum class Reason : std::uint8_t {
  BelowThreshold,
  RoutineDisabled,
  Offloaded,
  CapacityExceeded,
};

std::string_view verdict_name(Verdict v);
std::string_view reason_name(Reason r);

class Decision {
 public:
  static Decision offload() { return Decision(Verdict::Offload, Reason::Offloaded); }
  static Decision host(Reason why);

  Verdict verdict() const { return verdict_; }
  Reason reason() const { return reason_; }
  bool offloaded() const { return verdict_ == Verdict::Offload; }

  friend bool operator==(const Decision&, const Decision&) = default;

 private:
  Decision(Verdict v, Reason r) : verdict_(v), reason_(r) {}

  Verdict verdict_;
  Reason reason_;
};

}  // namespace scilib
