#include "tilatlas/error.hpp"

namespace tilatlas {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kMalformed: return "malformed";
    case ErrorCode::kUndefined: return "undefined";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace tilatlas
