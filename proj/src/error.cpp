#include "field_sentry/error.hpp"

namespace field_sentry {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidSelector: return "InvalidSelector";
    case ErrorCode::TargetNotFound: return "TargetNotFound";
    case ErrorCode::NotAnInput: return "NotAnInput";
    case ErrorCode::MissingReplacementSpec: return "MissingReplacementSpec";
    case ErrorCode::FieldNotFound: return "FieldNotFound";
    case ErrorCode::SnapshotMismatch: return "SnapshotMismatch";
    case ErrorCode::InvalidSnapshot: return "InvalidSnapshot";
    case ErrorCode::NoManifest: return "NoManifest";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::MalformedArchive: return "MalformedArchive";
    case ErrorCode::UnsupportedCrxVersion: return "UnsupportedCrxVersion";
    case ErrorCode::DuplicateTarget: return "DuplicateTarget";
    case ErrorCode::InvalidDirective: return "InvalidDirective";
    case ErrorCode::InvalidReport: return "InvalidReport";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace field_sentry
