#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace asbart {

enum class ErrorCode {
  invalid_argument = 1,
  structure = 2,
  numerical = 3,
  io = 4,
  parse = 5,
  schema = 6,
  version = 7,
  internal = 99,
};

// Every failure surfaced by the library is an Error carrying a code; the C API
// maps the code one-to-one onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline Error invalid_argument(const std::string& what) { return {ErrorCode::invalid_argument, what}; }
inline Error structure_error(const std::string& what) { return {ErrorCode::structure, what}; }
inline Error numerical_error(const std::string& what) { return {ErrorCode::numerical, what}; }

using WarningHandler = std::function<void(std::string_view)>;

/// Replaces the process-wide warning sink (default: "warning: ..." on stderr).
/// Passing an empty handler restores the default.
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace asbart
