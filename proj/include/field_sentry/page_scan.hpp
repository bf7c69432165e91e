#pragma once

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "field_sentry/dom.hpp"
#include "field_sentry/page_audit.hpp"

// The end-to-end single page check: detect, type probes, classify.
namespace field_sentry::scan {

inline constexpr std::string_view kMarkerNotLogin = "NotLogin";
inline constexpr std::string_view kMarkerNeedsDynamic = "NeedsDynamic";
inline constexpr std::string_view kMarkerNoSensitiveFields = "NoSensitiveFields";

struct PageScan {
  audit::LoginPageVerdict verdict;
  std::vector<audit::SensitiveField> fields;
  std::vector<audit::VulnFinding> findings;  // document order
  std::vector<std::string> markers;
};

/// Types a distinct probe secret into every sensitive field, then classifies
/// each one. Pages whose only sensitive fields are identity fields are
/// username-first flows and get NeedsDynamic instead of findings.
PageScan scan_document(dom::Document& doc, std::mt19937_64& rng);

PageScan scan_html(std::string_view html, std::mt19937_64& rng, std::string url = {});

}  // namespace field_sentry::scan
