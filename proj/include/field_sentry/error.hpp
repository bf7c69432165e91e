#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace field_sentry {

enum class ErrorCode {
  InvalidSelector,
  TargetNotFound,
  NotAnInput,
  MissingReplacementSpec,
  FieldNotFound,
  SnapshotMismatch,
  InvalidSnapshot,
  NoManifest,
  InvalidManifest,
  MalformedArchive,
  UnsupportedCrxVersion,
  DuplicateTarget,
  InvalidDirective,
  InvalidReport,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace field_sentry
