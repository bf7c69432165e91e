#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Browser-extension package loading, permission classification and the
// static input-selection / remote-code scans.
namespace field_sentry::ext {

struct ManifestSummary {
  int manifest_version = 3;
  std::set<std::string> api_permissions;
  std::set<std::string> host_permissions;
  std::set<std::string> content_script_matches;
  std::vector<std::string> content_script_files;
  std::vector<std::string> background_files;

  bool operator==(const ManifestSummary&) const = default;
};

struct ScriptFile {
  std::string path;
  std::string source;

  bool operator==(const ScriptFile&) const = default;
};

struct ExtensionPackage {
  std::string id;
  ManifestSummary manifest;
  std::vector<ScriptFile> scripts;  // every *.js file, sorted by path
  std::vector<std::string> other_files;
  std::map<std::string, std::string> resources;  // bytes of other_files
  std::string manifest_text;

  const ScriptFile* find_script(std::string_view path) const;
  bool is_content_script(std::string_view path) const;
};

// Ordered: NoInjection < SomePages < AllPages.
enum class PermissionClass { NoInjection = 0, SomePages = 1, AllPages = 2 };

std::string_view to_string(PermissionClass cls);
PermissionClass permission_class_from_string(std::string_view s);

inline constexpr std::array<std::string_view, 6> kSelectionCalls = {
    "querySelector",        "querySelectorAll",     "getElementById",
    "getElementsByClassName", "getElementsByTagName", "getElementsByName",
};

bool is_selection_call(std::string_view name);

struct SelectorFinding {
  std::string file;
  int line = 0;
  std::string call_name;
  std::string literal;
  std::string matched_token = "input";

  bool operator==(const SelectorFinding&) const = default;
};

enum class ComplianceKind { EvalCall, FunctionConstructor, RemoteFetchEval };

std::string_view to_string(ComplianceKind kind);
ComplianceKind compliance_kind_from_string(std::string_view s);

struct ComplianceFinding {
  std::string file;
  int line = 0;
  ComplianceKind kind = ComplianceKind::EvalCall;
  std::string snippet;

  bool operator==(const ComplianceFinding&) const = default;
};

struct ExtensionReport {
  std::string id;
  int manifest_version = 3;
  PermissionClass permission_class = PermissionClass::NoInjection;
  bool flagged = false;
  std::vector<std::string> content_scripts;
  std::vector<SelectorFinding> selector_findings;      // by (file, line)
  std::vector<ComplianceFinding> compliance_findings;  // by (file, line)

  bool operator==(const ExtensionReport&) const = default;
};

// Throws Error(InvalidManifest).
ManifestSummary parse_manifest(std::string_view json_text);

// Directory, ZIP or CRX3. Throws Error(NoManifest), Error(MalformedArchive),
// Error(UnsupportedCrxVersion), Error(Io).
ExtensionPackage load_extension(const std::filesystem::path& path);
ExtensionPackage load_extension_bytes(std::string_view bytes, std::string id);

bool covers_all_pages(const std::set<std::string>& patterns);
PermissionClass classify_permissions(const ManifestSummary& manifest);

std::vector<SelectorFinding> static_scan(std::string_view source, std::string_view file = "");
std::vector<ComplianceFinding> compliance_scan(std::string_view source,
                                               std::string_view file = "");

ExtensionReport analyze_package(const ExtensionPackage& pkg);

}  // namespace field_sentry::ext
