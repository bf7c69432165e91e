#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "field_sentry/ext.hpp"

// Rewrites content scripts so captured input values reach the console, and
// reads the resulting run logs.
namespace field_sentry::instrument {

inline constexpr std::string_view kMarker = "FIELD_SENTRY::";
inline constexpr std::string_view kLogPrefix = "console.log(\"FIELD_SENTRY::";
inline constexpr std::string_view kNoValue = "<novalue>";

struct InstrumentationEdit {
  std::string file;
  int line = 0;  // 1-based line of the statement in the original source
  std::string variable;
  std::string inserted_line;  // without indentation or line terminator

  bool operator==(const InstrumentationEdit&) const = default;
};

// Declarators the rewrite recognized but did not log, e.g. the second
// initializer of `var a = ..., b = ...`.
struct SkippedDeclarator {
  std::string file;
  int line = 0;
  std::string variable;
  std::string reason;

  bool operator==(const SkippedDeclarator&) const = default;
};

struct InstrumentResult {
  std::string text;
  std::vector<InstrumentationEdit> edits;
  std::vector<SkippedDeclarator> skipped;
};

std::string log_statement(std::string_view variable);

InstrumentResult instrument_source(std::string_view source, std::string_view file = "");

std::string strip_instrumentation(std::string_view instrumented);

// Every content script instrumented, everything else copied; ZIP output.
std::string repack_instrumented(const ext::ExtensionPackage& pkg,
                                std::vector<InstrumentationEdit>* edits = nullptr);

struct CaptureLine {
  int line_no = 0;
  std::string variable;
  std::string value;

  bool operator==(const CaptureLine&) const = default;
};

struct CaptureVerdict {
  bool captured = false;
  std::vector<CaptureLine> matching_lines;
};

CaptureVerdict detect_capture(std::string_view log, std::string_view probe_secret);

}  // namespace field_sentry::instrument
