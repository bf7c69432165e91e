#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "field_sentry/ext.hpp"
#include "field_sentry/page_audit.hpp"

namespace field_sentry::report {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr std::string_view kRedacted = "<redacted>";
inline constexpr std::string_view kEpoch = "1970-01-01T00:00:00Z";
// Marker set on an extension target whose instrumented run logged a probe.
inline constexpr std::string_view kMarkerCapturedDynamic = "CapturedDynamic";

enum class TargetKind { Page, Extension };

std::string_view to_string(TargetKind kind);

struct TargetRecord {
  std::string id;
  TargetKind kind = TargetKind::Page;
  // Page: Scanned, LoginFound, NoLoginFound, FetchFailed. Extension: Scanned.
  std::string outcome = "Scanned";
  std::optional<std::string> url;
  bool is_login = false;
  bool has_password_field = false;
  std::vector<std::string> markers;
  std::vector<audit::VulnFinding> findings;
  std::optional<ext::ExtensionReport> extension;
  std::string scanned_at = std::string(kEpoch);

  bool operator==(const TargetRecord&) const = default;
};

struct ScanReport {
  std::string tool_version = std::string(kToolVersion);
  std::string created_at = std::string(kEpoch);
  std::vector<TargetRecord> targets;

  bool operator==(const ScanReport&) const = default;
};

struct Rate {
  std::uint64_t numerator = 0;
  std::uint64_t denominator = 0;

  bool undefined() const { return denominator == 0; }
  double value() const;
  // One decimal place, half away from zero: "12.5%". Undefined renders 0.0%.
  std::string percent() const;

  bool operator==(const Rate&) const = default;
};

struct CorpusStats {
  std::uint64_t sites_scanned = 0;
  std::uint64_t login_pages_found = 0;
  std::uint64_t pages_with_password_fields = 0;
  std::uint64_t type_a_sites = 0;
  std::uint64_t type_a_count = 0;
  std::uint64_t type_b_count = 0;
  std::uint64_t type_b_presumed_count = 0;
  std::uint64_t protected_count = 0;
  std::uint64_t fields_classified = 0;
  std::uint64_t extensions_scanned = 0;
  std::uint64_t class_all_pages = 0;
  std::uint64_t class_some_pages = 0;
  std::uint64_t class_no_injection = 0;
  std::uint64_t flagged_static = 0;
  std::uint64_t flagged_dynamic = 0;

  Rate login_rate() const { return {login_pages_found, sites_scanned}; }
  Rate password_field_rate() const { return {pages_with_password_fields, login_pages_found}; }
  Rate type_a_site_rate() const { return {type_a_sites, pages_with_password_fields}; }
  Rate type_a_rate() const { return {type_a_count, fields_classified}; }
  Rate type_b_rate() const { return {type_b_count + type_b_presumed_count, fields_classified}; }
  Rate protected_rate() const { return {protected_count, fields_classified}; }
  Rate all_pages_rate() const { return {class_all_pages, extensions_scanned}; }
  Rate some_pages_rate() const { return {class_some_pages, extensions_scanned}; }
  Rate no_injection_rate() const { return {class_no_injection, extensions_scanned}; }
  Rate flagged_static_rate() const { return {flagged_static, extensions_scanned}; }
  Rate flagged_dynamic_rate() const { return {flagged_dynamic, extensions_scanned}; }

  bool operator==(const CorpusStats&) const = default;
};

// Throws Error(DuplicateTarget) when two targets share an id.
CorpusStats aggregate(const std::vector<ScanReport>& reports);
CorpusStats merge(const CorpusStats& a, const CorpusStats& b);

// Concatenates targets in order. Throws Error(DuplicateTarget).
ScanReport merge_reports(const std::vector<ScanReport>& reports);

// Secrets replaced by kRedacted in secret_used and evidence.
ScanReport redacted(const ScanReport& report);

// Every timestamp set to `stamp`.
ScanReport normalized(const ScanReport& report, std::string_view stamp = kEpoch);

enum class Format { Json, Csv };

Format format_from_string(std::string_view s);

struct WriteOptions {
  Format format = Format::Json;
  bool redact = true;
};

std::string write_report(const ScanReport& report, const WriteOptions& options = {});
std::string write_stats(const CorpusStats& stats, Format format = Format::Json);

// Throws Error(InvalidReport).
ScanReport read_report(std::string_view json_text);

// Single target as a JSON object; used for crawl journals. No redaction.
std::string write_target(const TargetRecord& target);
TargetRecord read_target(std::string_view json_text);

std::string csv_escape(std::string_view field);

std::string now_rfc3339();

// True for any exposed field (TypeA, TypeB, TypeBPresumed), any flagged
// extension, compliance hit or dynamic capture. Protected fields do not count.
bool has_findings(const ScanReport& report);

}  // namespace field_sentry::report
