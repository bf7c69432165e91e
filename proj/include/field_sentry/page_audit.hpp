#pragma once

#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "field_sentry/dom.hpp"

namespace field_sentry::audit {

/// A page counts as a login page when it has a password field or an
/// identity (username/email) field.
struct LoginPageVerdict {
  bool is_login = false;
  bool has_password_field = false;
  bool has_identity_field = false;
  std::vector<int> evidence;  // node ids of the fields that decided it
};

enum class FieldKind { Password, SSN, CreditCard, Identity };

std::string_view to_string(FieldKind kind);
std::optional<FieldKind> field_kind_from_string(std::string_view s);

struct SensitiveField {
  int node_id = 0;
  FieldKind kind = FieldKind::Password;
  // Lower-priority kinds the field also matched (e.g. a masked card number).
  std::vector<FieldKind> also_matches;
  std::string locator;
  bool masked_in_ui = false;

  bool operator==(const SensitiveField&) const = default;
};

enum class VulnKind { TypeA, TypeB, TypeBPresumed, Protected };

std::string_view to_string(VulnKind kind);
std::optional<VulnKind> vuln_kind_from_string(std::string_view s);

struct VulnFinding {
  SensitiveField field;
  VulnKind kind = VulnKind::TypeB;
  std::string evidence;  // at most kMaxEvidence bytes
  std::string secret_used;

  bool operator==(const VulnFinding&) const = default;
};

inline constexpr std::size_t kMaxEvidence = 200;
inline constexpr std::size_t kMinSecretLength = 8;
inline constexpr std::string_view kProbePrefix = "uniq-PW-";
inline constexpr std::string_view kMirrorsAttribute = "data-mirrors-value";
inline constexpr std::string_view kProtectedAttribute = "data-protected";

enum class SnapshotPhase { Before, After };

struct HtmlSnapshot {
  std::string url;
  std::string captured_at;  // RFC-3339
  std::string html;
  SnapshotPhase phase = SnapshotPhase::Before;
  std::optional<std::string> probe_secret;  // required for After
};

struct SnapshotPair {
  HtmlSnapshot before;
  HtmlSnapshot after;
};

LoginPageVerdict detect_login_page(const dom::Document& doc);

/// One entry per sensitive input, in document order.
std::vector<SensitiveField> find_sensitive_fields(const dom::Document& doc);

/// Sets the sensitive flag used by the access audit on every listed node.
void flag_sensitive_fields(dom::Document& doc, const std::vector<SensitiveField>& fields);

/// Decides TypeA / TypeB / Protected for a field the secret was typed into.
/// Throws Error(FieldNotFound) when the locator no longer resolves and
/// Error(InvalidArgument) for secrets shorter than kMinSecretLength.
VulnFinding classify_field(dom::Document& doc, const SensitiveField& field,
                           std::string_view secret);

/// Static before/after comparison. Fields that are not provably TypeA come
/// back as TypeBPresumed, or Protected when they carry the protection marker.
std::vector<VulnFinding> audit_snapshot_pair(const HtmlSnapshot& before,
                                             const HtmlSnapshot& after);

// Canonical path such as `html > body:nth-child(2) > form#login:nth-child(1)`.
std::string locator_for(const dom::Node& node);
dom::Node* resolve_locator(const dom::Document& doc, std::string_view locator);

/// `uniq-PW-` followed by 8 alphanumerics, regenerated until it does not
/// occur in `avoid`.
std::string make_probe_secret(std::mt19937_64& rng, std::string_view avoid = {});

// Up to kMaxEvidence bytes of `text` centred on [pos, pos + len).
std::string evidence_window(std::string_view text, std::size_t pos, std::size_t len);

bool is_mirrored_field(const dom::Node& node);
bool is_protected_field(const dom::Node& node);

/// Reads a snapshot pair from a directory or ZIP archive holding
/// `before.html`, `after.html` and a `meta` file of key=value lines.
SnapshotPair load_snapshot_pair(const std::filesystem::path& path);
void save_snapshot_pair(const std::filesystem::path& dir, const SnapshotPair& pair);

}  // namespace field_sentry::audit
