#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anosovlab {

enum class ErrorCode {
  InvalidParams,
  NonFinite,
  Unsupported,
  DegenerateOrbit,
  IllConditioned,
  NoConvergence,
  NoIntersection,
  EmptyIntersection,
  DegenerateFit,
  NotStablyRelated,
  ChartOverflow,
  NoRoot,
  EmptyBox,
  ParseError,
  SchemaError,
  KindMismatch,
};

std::string_view error_name(ErrorCode code);

// Process exit status for the CLI: 2 config, 3 numeric, 4 unsupported.
int exit_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace anosovlab
