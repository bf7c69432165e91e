#include "field_sentry/page_audit.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "field_sentry/archive.hpp"
#include "field_sentry/error.hpp"
#include "field_sentry/text.hpp"

namespace field_sentry::audit {

namespace {

constexpr std::array<std::string_view, 7> kIdentityKeywords{
    "email", "e-mail", "username", "user", "login", "loginid", "userid"};
constexpr std::array<std::string_view, 3> kSsnTokens{"ssn", "social-security",
                                                     "socialsecurity"};
constexpr std::array<std::string_view, 5> kCardTokens{"cardnumber", "card-number", "ccnum",
                                                      "cvv", "cvc"};
constexpr std::array<std::string_view, 2> kCardAutocomplete{"cc-number", "cc-csc"};

// Input types that never hold typed secrets.
bool is_non_text_type(std::string_view type) {
  static constexpr std::string_view kTypes[] = {"hidden", "submit", "button", "checkbox",
                                                "radio",  "image",  "reset",  "file",
                                                "range",  "color"};
  return std::find(std::begin(kTypes), std::end(kTypes), type) != std::end(kTypes);
}

std::string input_type(const dom::Node& node) {
  auto type = node.attribute("type");
  return type ? text::to_lower(text::trim(*type)) : std::string("text");
}

bool is_text_like_input(const dom::Node& node) {
  return node.is("input") && !is_non_text_type(input_type(node));
}

template <std::size_t N>
bool attr_contains_any(const dom::Node& node, std::initializer_list<std::string_view> attrs,
                       const std::array<std::string_view, N>& tokens) {
  for (auto name : attrs) {
    auto value = node.attribute(name);
    if (!value) continue;
    for (auto token : tokens) {
      if (text::icontains(*value, token)) return true;
    }
  }
  return false;
}

// Text of <label for=id> or of an enclosing <label>, normalized so that
// "Social Security" reads as "social-security".
std::string label_text(const dom::Document& doc, const dom::Node& node) {
  std::string out;
  if (auto id = node.attribute("id"); id && !id->empty()) {
    dom::for_each_element(doc.root(), [&](const dom::Node& el) {
      if (el.is("label") && el.attribute_equals("for", *id)) out += " " + el.text_content();
    });
  }
  for (const dom::Node* p = node.parent(); p; p = p->parent()) {
    if (p->is("label")) out += " " + p->text_content();
  }
  std::string normalized = text::collapse_whitespace(text::to_lower(out));
  std::replace(normalized.begin(), normalized.end(), ' ', '-');
  return normalized;
}

bool matches_identity(const dom::Node& node) {
  if (!is_text_like_input(node) || dom::is_password_input(node)) return false;
  if (input_type(node) == "email") return true;
  return attr_contains_any(node, {"name", "id", "autocomplete", "placeholder"},
                           kIdentityKeywords);
}

bool matches_ssn(const dom::Document& doc, const dom::Node& node) {
  if (!is_text_like_input(node)) return false;
  if (attr_contains_any(node, {"name", "id", "autocomplete"}, kSsnTokens)) return true;
  std::string label = label_text(doc, node);
  return std::any_of(kSsnTokens.begin(), kSsnTokens.end(),
                     [&](std::string_view t) { return label.find(t) != std::string::npos; });
}

bool matches_card(const dom::Node& node) {
  if (!is_text_like_input(node)) return false;
  if (auto ac = node.attribute("autocomplete")) {
    for (auto token : text::split_whitespace(*ac)) {
      for (auto want : kCardAutocomplete) {
        if (text::iequals(token, want)) return true;
      }
    }
  }
  return attr_contains_any(node, {"name", "id"}, kCardTokens);
}

std::string segment_for(const dom::Node& node) {
  std::string seg = node.tag();
  if (auto id = node.attribute("id"); id && !id->empty()) {
    bool plain = std::all_of(id->begin(), id->end(), [](char c) {
      return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
    if (plain) seg += "#" + std::string(*id);
  }
  if (const dom::Node* parent = node.parent()) {
    auto siblings = parent->element_children();
    auto it = std::find(siblings.begin(), siblings.end(), &node);
    seg += ":nth-child(" + std::to_string(it - siblings.begin() + 1) + ")";
  }
  return seg;
}

std::size_t find_secret(std::string_view haystack, std::string_view secret) {
  return secret.empty() ? std::string_view::npos : haystack.find(secret);
}

std::string body_html(const dom::Document& doc) {
  const dom::Node* body = doc.body();
  return body ? dom::outer_html(*body) : std::string();
}

}  // namespace

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Password: return "Password";
    case FieldKind::SSN: return "SSN";
    case FieldKind::CreditCard: return "CreditCard";
    case FieldKind::Identity: return "Identity";
  }
  return "Unknown";
}

std::optional<FieldKind> field_kind_from_string(std::string_view s) {
  for (auto k : {FieldKind::Password, FieldKind::SSN, FieldKind::CreditCard, FieldKind::Identity}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::string_view to_string(VulnKind kind) {
  switch (kind) {
    case VulnKind::TypeA: return "TypeA";
    case VulnKind::TypeB: return "TypeB";
    case VulnKind::TypeBPresumed: return "TypeBPresumed";
    case VulnKind::Protected: return "Protected";
  }
  return "Unknown";
}

std::optional<VulnKind> vuln_kind_from_string(std::string_view s) {
  for (auto k : {VulnKind::TypeA, VulnKind::TypeB, VulnKind::TypeBPresumed, VulnKind::Protected}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

bool is_mirrored_field(const dom::Node& node) {
  auto v = node.attribute(kMirrorsAttribute);
  return v && text::iequals(*v, "true");
}

bool is_protected_field(const dom::Node& node) {
  auto v = node.attribute(kProtectedAttribute);
  return v && text::iequals(*v, "true");
}

LoginPageVerdict detect_login_page(const dom::Document& doc) {
  LoginPageVerdict verdict;
  dom::for_each_element(doc.root(), [&](const dom::Node& el) {
    if (dom::is_password_input(el)) {
      verdict.has_password_field = true;
      verdict.evidence.push_back(el.id());
    } else if (matches_identity(el)) {
      verdict.has_identity_field = true;
      verdict.evidence.push_back(el.id());
    }
  });
  verdict.is_login = verdict.has_password_field || verdict.has_identity_field;
  return verdict;
}

std::vector<SensitiveField> find_sensitive_fields(const dom::Document& doc) {
  std::vector<SensitiveField> fields;
  dom::for_each_element(doc.root(), [&](const dom::Node& el) {
    if (!el.is("input")) return;
    std::vector<FieldKind> kinds;
    if (dom::is_password_input(el)) kinds.push_back(FieldKind::Password);
    if (matches_ssn(doc, el)) kinds.push_back(FieldKind::SSN);
    if (matches_card(el)) kinds.push_back(FieldKind::CreditCard);
    if (matches_identity(el)) kinds.push_back(FieldKind::Identity);
    if (kinds.empty()) return;
    SensitiveField field;
    field.node_id = el.id();
    field.kind = kinds.front();
    field.also_matches.assign(kinds.begin() + 1, kinds.end());
    field.locator = locator_for(el);
    field.masked_in_ui = dom::is_password_input(el) || is_protected_field(el);
    fields.push_back(std::move(field));
  });
  return fields;
}

void flag_sensitive_fields(dom::Document& doc, const std::vector<SensitiveField>& fields) {
  for (const auto& field : fields) {
    if (dom::Node* node = doc.find_by_id(field.node_id)) node->set_sensitive_flag(true);
  }
}

VulnFinding classify_field(dom::Document& doc, const SensitiveField& field,
                           std::string_view secret) {
  if (secret.size() < kMinSecretLength) {
    throw Error(ErrorCode::InvalidArgument, "probe secret shorter than 8 characters");
  }
  dom::Node* node = resolve_locator(doc, field.locator);
  if (!node) throw Error(ErrorCode::FieldNotFound, field.locator);

  VulnFinding finding;
  finding.field = field;
  finding.field.node_id = node->id();
  finding.secret_used = std::string(secret);

  std::string body = body_html(doc);
  if (auto pos = find_secret(body, secret); pos != std::string::npos) {
    finding.kind = VulnKind::TypeA;
    finding.evidence = evidence_window(body, pos, secret.size());
    return finding;
  }
  if (dom::read_live_value(*node) == secret) {
    finding.kind = VulnKind::TypeB;
    finding.evidence = "document.querySelector(\"" + field.locator + "\").value";
    return finding;
  }
  finding.kind = VulnKind::Protected;
  finding.evidence = "live value does not expose the typed secret";
  return finding;
}

std::vector<VulnFinding> audit_snapshot_pair(const HtmlSnapshot& before,
                                             const HtmlSnapshot& after) {
  if (!after.probe_secret || after.probe_secret->empty()) {
    throw Error(ErrorCode::InvalidSnapshot, "after snapshot has no probe secret");
  }
  if (!before.url.empty() && !after.url.empty() && before.url != after.url) {
    throw Error(ErrorCode::SnapshotMismatch, "snapshots are for different urls");
  }
  const std::string& secret = *after.probe_secret;
  dom::Document before_doc = dom::parse_html(before.html);
  dom::Document after_doc = dom::parse_html(after.html);
  std::string after_body = body_html(after_doc);

  auto fields = find_sensitive_fields(before_doc);
  std::vector<VulnFinding> findings;
  std::size_t matched = 0;
  for (const auto& field : fields) {
    const dom::Node* old_node = before_doc.find_by_id(field.node_id);
    dom::Node* node = resolve_locator(after_doc, field.locator);
    if (!node) {
      // Fall back to the same input identified by id or name.
      dom::for_each_element(after_doc.root(), [&](dom::Node& el) {
        if (node || !el.is("input")) return;
        for (auto key : {"id", "name"}) {
          auto want = old_node->attribute(key);
          if (want && !want->empty() && el.attribute_equals(key, *want)) node = &el;
        }
      });
    }
    if (!node) continue;
    ++matched;
    VulnFinding finding;
    finding.field = field;
    finding.field.node_id = node->id();
    finding.field.locator = locator_for(*node);
    finding.secret_used = secret;
    auto field_pos = dom::outer_html(*node).find(secret);
    if (field_pos != std::string::npos) {
      finding.kind = VulnKind::TypeA;
      finding.evidence = evidence_window(after_body, after_body.find(secret), secret.size());
    } else if (is_protected_field(*node)) {
      finding.kind = VulnKind::Protected;
      finding.evidence = "protected field; secret absent from markup";
    } else {
      finding.kind = VulnKind::TypeBPresumed;
      finding.evidence = "secret absent from markup; live value unobservable in snapshot";
    }
    findings.push_back(std::move(finding));
  }
  if (!fields.empty() && matched == 0) {
    throw Error(ErrorCode::SnapshotMismatch, "after snapshot lacks every sensitive field");
  }
  return findings;
}

std::string locator_for(const dom::Node& node) {
  std::vector<std::string> segments;
  for (const dom::Node* n = &node; n; n = n->parent()) segments.push_back(segment_for(*n));
  std::string out;
  for (auto it = segments.rbegin(); it != segments.rend(); ++it) {
    if (!out.empty()) out += " > ";
    out += *it;
  }
  return out;
}

dom::Node* resolve_locator(const dom::Document& doc, std::string_view locator) {
  std::vector<std::string_view> segments;
  std::size_t start = 0;
  while (start <= locator.size()) {
    auto pos = locator.find(" > ", start);
    if (pos == std::string_view::npos) {
      segments.push_back(locator.substr(start));
      break;
    }
    segments.push_back(locator.substr(start, pos - start));
    start = pos + 3;
  }
  if (segments.empty()) return nullptr;
  dom::Node* node = const_cast<dom::Node*>(&doc.root());
  if (segment_for(*node) != segments.front()) return nullptr;
  for (std::size_t i = 1; i < segments.size(); ++i) {
    std::string_view seg = segments[i];
    auto open = seg.rfind(":nth-child(");
    if (open == std::string_view::npos || seg.back() != ')') return nullptr;
    std::size_t index = 0;
    try {
      index = std::stoul(std::string(seg.substr(open + 11, seg.size() - open - 12)));
    } catch (const std::exception&) {
      return nullptr;
    }
    auto children = node->element_children();
    if (index == 0 || index > children.size()) return nullptr;
    dom::Node* next = children[index - 1];
    if (segment_for(*next) != seg) return nullptr;
    node = next;
  }
  return node;
}

std::string make_probe_secret(std::mt19937_64& rng, std::string_view avoid) {
  static constexpr std::string_view kAlphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  std::uniform_int_distribution<std::size_t> pick(0, kAlphabet.size() - 1);
  while (true) {
    std::string secret(kProbePrefix);
    for (int i = 0; i < 8; ++i) secret.push_back(kAlphabet[pick(rng)]);
    if (avoid.find(secret) == std::string_view::npos) return secret;
  }
}

std::string evidence_window(std::string_view text, std::size_t pos, std::size_t len) {
  if (pos >= text.size()) return {};
  len = std::min(len, text.size() - pos);
  if (len >= kMaxEvidence) {
    return std::string(text.substr(pos, text::utf8_floor(text.substr(pos), kMaxEvidence)));
  }
  auto continuation = [&](std::size_t i) {
    return (static_cast<unsigned char>(text[i]) & 0xC0) == 0x80;
  };
  std::size_t side = (kMaxEvidence - len) / 2;
  std::size_t begin = pos > side ? pos - side : 0;
  while (begin < pos && continuation(begin)) ++begin;
  std::size_t end = std::min(text.size(), pos + len + side);
  while (end > pos + len && end < text.size() && continuation(end)) --end;
  return std::string(text.substr(begin, end - begin));
}

// ---------------------------------------------------------------------------
// Snapshot pair files

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

SnapshotPair pair_from_parts(std::string before_html, std::string after_html,
                             std::string_view meta) {
  SnapshotPair pair;
  for (auto line : text::split(meta, '\n')) {
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    auto key = text::trim(line.substr(0, eq));
    std::string value(text::trim(line.substr(eq + 1)));
    if (key == "url") {
      pair.before.url = pair.after.url = value;
    } else if (key == "probe_secret") {
      pair.after.probe_secret = value;
    } else if (key == "captured_at") {
      pair.before.captured_at = pair.after.captured_at = value;
    }
  }
  if (!pair.after.probe_secret) throw Error(ErrorCode::InvalidSnapshot, "meta lacks probe_secret");
  pair.before.html = std::move(before_html);
  pair.after.html = std::move(after_html);
  pair.before.phase = SnapshotPhase::Before;
  pair.after.phase = SnapshotPhase::After;
  return pair;
}

}  // namespace

SnapshotPair load_snapshot_pair(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) {
    for (auto name : {"before.html", "after.html", "meta"}) {
      if (!std::filesystem::exists(path / name)) {
        throw Error(ErrorCode::InvalidSnapshot, path.string() + " lacks " + name);
      }
    }
    return pair_from_parts(read_file(path / "before.html"), read_file(path / "after.html"),
                           read_file(path / "meta"));
  }
  auto entries = archive::read_zip(read_file(path));
  auto find = [&](std::string_view name) -> std::string {
    for (const auto& e : entries) {
      if (e.path == name) return e.data;
    }
    throw Error(ErrorCode::InvalidSnapshot, path.string() + " lacks " + std::string(name));
  };
  return pair_from_parts(find("before.html"), find("after.html"), find("meta"));
}

void save_snapshot_pair(const std::filesystem::path& dir, const SnapshotPair& pair) {
  std::filesystem::create_directories(dir);
  write_file(dir / "before.html", pair.before.html);
  write_file(dir / "after.html", pair.after.html);
  std::string meta = "url=" + pair.after.url + "\nprobe_secret=" +
                     pair.after.probe_secret.value_or("") + "\ncaptured_at=" +
                     pair.after.captured_at + "\n";
  write_file(dir / "meta", meta);
}

}  // namespace field_sentry::audit
