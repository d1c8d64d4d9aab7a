#include "anosovlab/errors.hpp"

namespace anosovlab {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::DegenerateOrbit: return "DegenerateOrbit";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NoIntersection: return "NoIntersection";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::NotStablyRelated: return "NotStablyRelated";
    case ErrorCode::ChartOverflow: return "ChartOverflow";
    case ErrorCode::NoRoot: return "NoRoot";
    case ErrorCode::EmptyBox: return "EmptyBox";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::KindMismatch: return "KindMismatch";
  }
  return "Unknown";
}

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::InvalidParams:
    case ErrorCode::KindMismatch:
      return 2;
    case ErrorCode::Unsupported:
      return 4;
    default:
      return 3;
  }
}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, std::string(error_name(code)) + ": " + message);
}

}  // namespace anosovlab
