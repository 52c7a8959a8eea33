#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hitlist {

enum class ErrorKind {
  Parse,
  Argument,
  NotEui64,
  EmptyInput,
  UnplannedResponse,
  Config,
  Validation,
  Io,
  Malformed,
};

std::string_view to_string(ErrorKind kind);

// Every library failure is reported as an Error carrying a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Minimal warning sink; stderr unless silenced (tests silence it).
void warn(std::string_view message);
void set_warnings_enabled(bool enabled);

}  // namespace hitlist
