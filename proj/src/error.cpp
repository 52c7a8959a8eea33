#include "hitlist/error.hpp"

#include <atomic>
#include <iostream>

namespace hitlist {

namespace {
std::atomic<bool> g_warnings_enabled{true};
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Argument: return "argument";
    case ErrorKind::NotEui64: return "not-eui64";
    case ErrorKind::EmptyInput: return "empty-input";
    case ErrorKind::UnplannedResponse: return "unplanned-response";
    case ErrorKind::Config: return "config";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Io: return "io";
    case ErrorKind::Malformed: return "malformed";
  }
  return "unknown";
}

void warn(std::string_view message) {
  if (g_warnings_enabled.load(std::memory_order_relaxed)) {
    std::cerr << "warning: " << message << '\n';
  }
}

void set_warnings_enabled(bool enabled) {
  g_warnings_enabled.store(enabled, std::memory_order_relaxed);
}

}  // namespace hitlist
