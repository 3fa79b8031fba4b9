#include "neos/error.hpp"

namespace neos {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kLayoutMismatch: return "layout mismatch";
    case ErrorCode::kZeroVector: return "zero vector";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kConfig: return "config error";
  }
  return "unknown";
}

}  // namespace neos
