#pragma once

#include <stdexcept>
#include <string>

namespace scilib {

enum class ErrorCode {
  InvalidArgument,
  UnknownRoutine,
  ConfigParse,
  EmptyRegion,
  TraceFormat,
  UnknownProfile,
  SpecError,
  Underdetermined,
  Io,
  SymbolNotFound,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace scilib
