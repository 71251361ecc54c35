#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tilatlas {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kConflict,
  kMalformed,
  kUndefined,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code so the
/// HTTP layer can map it to a status and the CLI to an exit message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string detail = {})
      : std::runtime_error(message),
        code_(code),
        detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, std::string message,
                              std::string detail = {}) {
  throw Error(code, std::move(message), std::move(detail));
}

}  // namespace tilatlas
