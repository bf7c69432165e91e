#include "field_sentry/ext.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "field_sentry/archive.hpp"
#include "field_sentry/error.hpp"
#include "field_sentry/js_lexer.hpp"
#include "field_sentry/text.hpp"

namespace field_sentry::ext {

namespace fs = std::filesystem;
using js::Token;
using js::TokenKind;

namespace {

std::string normalize_path(std::string_view p) {
  while (p.starts_with("./")) p.remove_prefix(2);
  while (p.starts_with("/")) p.remove_prefix(1);
  return std::string(p);
}

bool is_js_path(std::string_view path) {
  return path.size() > 3 && text::iequals(path.substr(path.size() - 3), ".js");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExtensionPackage from_entries(std::vector<archive::Entry> entries, std::string id) {
  std::sort(entries.begin(), entries.end(),
            [](const archive::Entry& a, const archive::Entry& b) { return a.path < b.path; });
  ExtensionPackage pkg;
  pkg.id = std::move(id);
  bool have_manifest = false;
  for (auto& entry : entries) {
    if (entry.path == "manifest.json") {
      pkg.manifest_text = std::move(entry.data);
      have_manifest = true;
    } else if (is_js_path(entry.path)) {
      pkg.scripts.push_back(ScriptFile{entry.path, std::move(entry.data)});
    } else {
      pkg.other_files.push_back(entry.path);
      pkg.resources.emplace(entry.path, std::move(entry.data));
    }
  }
  if (!have_manifest) throw Error(ErrorCode::NoManifest, "no manifest.json at package root");
  pkg.manifest = parse_manifest(pkg.manifest_text);
  return pkg;
}

std::vector<std::string> string_array(const nlohmann::json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  const auto& value = j[key];
  if (!value.is_array()) throw Error(ErrorCode::InvalidManifest, std::string(key) + " must be an array");
  for (const auto& item : value) {
    if (item.is_string()) out.push_back(item.get<std::string>());
  }
  return out;
}

bool looks_like_host_pattern(std::string_view p) {
  return p == "<all_urls>" || p.find("://") != std::string_view::npos;
}

std::string line_snippet(std::string_view source, const Token& token) {
  std::size_t start = token.begin;
  while (start > 0 && source[start - 1] != '\n') --start;
  std::size_t end = source.find('\n', token.begin);
  if (end == std::string_view::npos) end = source.size();
  std::string line(text::trim(source.substr(start, end - start)));
  if (line.size() > 160) line.resize(text::utf8_floor(line, 160));
  return line;
}

bool prev_is(const std::vector<Token>& t, std::size_t i, std::string_view what) {
  return i > 0 && t[i - 1].is(what);
}

bool is_member_access(const std::vector<Token>& t, std::size_t i) {
  return prev_is(t, i, ".") || prev_is(t, i, "?.");
}

bool is_call_at(const std::vector<Token>& t, std::size_t i) {
  return i + 1 < t.size() && t[i + 1].is("(");
}

// Fetch/XHR dataflow within one file.
class TaintTracker {
 public:
  explicit TaintTracker(const std::vector<Token>& tokens) : t_(tokens) {
    for (int pass = 0; pass < 16; ++pass) {
      std::size_t before = tainted_.size();
      propagate_chains();
      propagate_assignments();
      if (tainted_.size() == before) break;
    }
  }

  bool range_tainted(std::size_t begin, std::size_t end) const {
    for (std::size_t i = begin; i < end && i < t_.size(); ++i) {
      const Token& tok = t_[i];
      if (tok.kind != TokenKind::Identifier) continue;
      if (tok.text == "fetch" && is_call_at(t_, i)) return true;
      if (tok.text == "responseText" && is_member_access(t_, i)) return true;
      if (!is_member_access(t_, i) && tainted_.count(tok.text)) return true;
    }
    return false;
  }

 private:
  const std::vector<Token>& t_;
  std::set<std::string> tainted_;

  void taint_callback_params(std::size_t k) {
    if (k < t_.size() && t_[k].is("async")) ++k;
    if (k >= t_.size()) return;
    if (t_[k].is("function")) {
      ++k;
      if (k < t_.size() && t_[k].kind == TokenKind::Identifier) ++k;
    }
    if (k < t_.size() && t_[k].kind == TokenKind::Identifier && k + 1 < t_.size() &&
        t_[k + 1].is("=>")) {
      tainted_.insert(t_[k].text);
      return;
    }
    if (k + 1 < t_.size() && t_[k].is("(") && t_[k + 1].kind == TokenKind::Identifier) {
      tainted_.insert(t_[k + 1].text);
    }
  }

  // Walks `.name(...)` links after a tainted base, tainting `then` callback
  // parameters.
  void walk_chain(std::size_t j) {
    while (j + 1 < t_.size() && (t_[j].is(".") || t_[j].is("?.")) &&
           t_[j + 1].kind == TokenKind::Identifier) {
      const Token& name = t_[j + 1];
      j += 2;
      if (j < t_.size() && t_[j].is("(")) {
        if (name.text == "then") taint_callback_params(j + 1);
        j = js::skip_balanced(t_, j) + 1;
      }
    }
  }

  void propagate_chains() {
    for (std::size_t i = 0; i < t_.size(); ++i) {
      const Token& tok = t_[i];
      if (tok.kind != TokenKind::Identifier || is_member_access(t_, i)) continue;
      if (tok.text == "fetch" && is_call_at(t_, i)) {
        walk_chain(js::skip_balanced(t_, i + 1) + 1);
      } else if (tainted_.count(tok.text)) {
        walk_chain(i + 1);
      }
    }
  }

  void propagate_assignments() {
    for (std::size_t i = 0; i + 1 < t_.size(); ++i) {
      if (t_[i].kind != TokenKind::Identifier || !t_[i + 1].is("=")) continue;
      if (is_member_access(t_, i) || tainted_.count(t_[i].text)) continue;
      std::size_t end = js::expression_end(t_, i + 2);
      if (range_tainted(i + 2, end)) tainted_.insert(t_[i].text);
    }
  }
};

}  // namespace

// ---------------------------------------------------------------------------

const ScriptFile* ExtensionPackage::find_script(std::string_view path) const {
  std::string wanted = normalize_path(path);
  for (const auto& s : scripts) {
    if (s.path == wanted) return &s;
  }
  return nullptr;
}

bool ExtensionPackage::is_content_script(std::string_view path) const {
  std::string wanted = normalize_path(path);
  for (const auto& f : manifest.content_script_files) {
    if (normalize_path(f) == wanted) return true;
  }
  return false;
}

std::string_view to_string(PermissionClass cls) {
  switch (cls) {
    case PermissionClass::AllPages: return "AllPages";
    case PermissionClass::SomePages: return "SomePages";
    case PermissionClass::NoInjection: return "NoInjection";
  }
  return "NoInjection";
}

PermissionClass permission_class_from_string(std::string_view s) {
  if (s == "AllPages") return PermissionClass::AllPages;
  if (s == "SomePages") return PermissionClass::SomePages;
  if (s == "NoInjection") return PermissionClass::NoInjection;
  throw Error(ErrorCode::InvalidArgument, "unknown permission class " + std::string(s));
}

std::string_view to_string(ComplianceKind kind) {
  switch (kind) {
    case ComplianceKind::EvalCall: return "EvalCall";
    case ComplianceKind::FunctionConstructor: return "FunctionConstructor";
    case ComplianceKind::RemoteFetchEval: return "RemoteFetchEval";
  }
  return "EvalCall";
}

ComplianceKind compliance_kind_from_string(std::string_view s) {
  if (s == "EvalCall") return ComplianceKind::EvalCall;
  if (s == "FunctionConstructor") return ComplianceKind::FunctionConstructor;
  if (s == "RemoteFetchEval") return ComplianceKind::RemoteFetchEval;
  throw Error(ErrorCode::InvalidArgument, "unknown compliance kind " + std::string(s));
}

bool is_selection_call(std::string_view name) {
  return std::find(kSelectionCalls.begin(), kSelectionCalls.end(), name) != kSelectionCalls.end();
}

ManifestSummary parse_manifest(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidManifest, "manifest is not an object");
  if (!j.contains("manifest_version") || !j["manifest_version"].is_number_integer()) {
    throw Error(ErrorCode::InvalidManifest, "missing integer manifest_version");
  }
  ManifestSummary m;
  m.manifest_version = j["manifest_version"].get<int>();
  if (m.manifest_version != 2 && m.manifest_version != 3) {
    throw Error(ErrorCode::InvalidManifest,
                "manifest_version " + std::to_string(m.manifest_version));
  }
  try {
    for (auto& p : string_array(j, "permissions")) {
      if (m.manifest_version == 2 && looks_like_host_pattern(p)) {
        m.host_permissions.insert(p);
      } else {
        m.api_permissions.insert(p);
      }
    }
    if (m.manifest_version == 3) {
      for (auto& p : string_array(j, "host_permissions")) m.host_permissions.insert(p);
    }
    if (j.contains("content_scripts")) {
      if (!j["content_scripts"].is_array()) {
        throw Error(ErrorCode::InvalidManifest, "content_scripts must be an array");
      }
      for (const auto& cs : j["content_scripts"]) {
        if (!cs.is_object()) continue;
        for (auto& p : string_array(cs, "matches")) m.content_script_matches.insert(p);
        for (auto& f : string_array(cs, "js")) {
          f = normalize_path(f);
          if (std::find(m.content_script_files.begin(), m.content_script_files.end(), f) ==
              m.content_script_files.end()) {
            m.content_script_files.push_back(f);
          }
        }
      }
    }
    if (j.contains("background") && j["background"].is_object()) {
      const auto& bg = j["background"];
      for (auto& f : string_array(bg, "scripts")) m.background_files.push_back(normalize_path(f));
      if (bg.contains("service_worker") && bg["service_worker"].is_string()) {
        m.background_files.push_back(normalize_path(bg["service_worker"].get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidManifest, e.what());
  }
  return m;
}

ExtensionPackage load_extension_bytes(std::string_view bytes, std::string id) {
  if (archive::looks_like_crx(bytes)) bytes = archive::crx_payload(bytes);
  if (!archive::looks_like_zip(bytes)) {
    throw Error(ErrorCode::MalformedArchive, "neither a ZIP nor a CRX package");
  }
  return from_entries(archive::read_zip(bytes), std::move(id));
}

ExtensionPackage load_extension(const fs::path& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    std::vector<archive::Entry> entries;
    for (auto it = fs::recursive_directory_iterator(path); it != fs::recursive_directory_iterator();
         ++it) {
      if (!it->is_regular_file()) continue;
      std::string rel = fs::relative(it->path(), path).generic_string();
      entries.push_back(archive::Entry{rel, read_file(it->path())});
    }
    fs::path clean = path;
    if (!clean.has_filename()) clean = clean.parent_path();
    return from_entries(std::move(entries), clean.filename().string());
  }
  if (!fs::is_regular_file(path, ec)) throw Error(ErrorCode::Io, "no such package " + path.string());
  return load_extension_bytes(read_file(path), path.stem().string());
}

bool covers_all_pages(const std::set<std::string>& patterns) {
  return patterns.count("<all_urls>") || patterns.count("*://*/*") ||
         (patterns.count("http://*/*") && patterns.count("https://*/*"));
}

PermissionClass classify_permissions(const ManifestSummary& m) {
  bool scripting = m.api_permissions.count("scripting") > 0;
  if (covers_all_pages(m.content_script_matches) ||
      (scripting && covers_all_pages(m.host_permissions))) {
    return PermissionClass::AllPages;
  }
  if (!m.content_script_matches.empty() || (scripting && !m.host_permissions.empty())) {
    return PermissionClass::SomePages;
  }
  return PermissionClass::NoInjection;
}

std::vector<SelectorFinding> static_scan(std::string_view source, std::string_view file) {
  auto t = js::tokenize(source);
  std::vector<SelectorFinding> out;
  for (std::size_t i = 0; i + 3 < t.size(); ++i) {
    if (t[i].kind != TokenKind::Identifier || !is_selection_call(t[i].text)) continue;
    if (prev_is(t, i, "function")) continue;
    if (!t[i + 1].is("(") || !t[i + 2].is_literal_string()) continue;
    if (!t[i + 3].is(",") && !t[i + 3].is(")")) continue;
    if (!text::icontains(t[i + 2].text, "input")) continue;
    out.push_back(SelectorFinding{std::string(file), t[i].line, t[i].text, t[i + 2].text, "input"});
  }
  return out;
}

std::vector<ComplianceFinding> compliance_scan(std::string_view source, std::string_view file) {
  auto t = js::tokenize(source);
  TaintTracker taint(t);
  std::vector<ComplianceFinding> out;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const Token& tok = t[i];
    if (tok.kind != TokenKind::Identifier || !t[i + 1].is("(")) continue;
    if (prev_is(t, i, "function")) continue;
    bool global_member = is_member_access(t, i) && i >= 2 &&
                         (t[i - 2].is("window") || t[i - 2].is("globalThis") || t[i - 2].is("self"));
    if (is_member_access(t, i) && !global_member) continue;
    if (tok.text == "eval") {
      std::size_t close = js::skip_balanced(t, i + 1);
      ComplianceKind kind = taint.range_tainted(i + 2, close) ? ComplianceKind::RemoteFetchEval
                                                              : ComplianceKind::EvalCall;
      out.push_back(ComplianceFinding{std::string(file), tok.line, kind, line_snippet(source, tok)});
    } else if (tok.text == "Function") {
      out.push_back(ComplianceFinding{std::string(file), tok.line,
                                      ComplianceKind::FunctionConstructor,
                                      line_snippet(source, tok)});
    }
  }
  return out;
}

ExtensionReport analyze_package(const ExtensionPackage& pkg) {
  ExtensionReport report;
  report.id = pkg.id;
  report.manifest_version = pkg.manifest.manifest_version;
  report.permission_class = classify_permissions(pkg.manifest);
  report.content_scripts = pkg.manifest.content_script_files;
  for (const auto& script : pkg.scripts) {
    auto sel = static_scan(script.source, script.path);
    if (!sel.empty() && pkg.is_content_script(script.path)) report.flagged = true;
    report.selector_findings.insert(report.selector_findings.end(), sel.begin(), sel.end());
    auto comp = compliance_scan(script.source, script.path);
    report.compliance_findings.insert(report.compliance_findings.end(), comp.begin(), comp.end());
  }
  auto by_file_line = [](const auto& a, const auto& b) {
    return std::tie(a.file, a.line) < std::tie(b.file, b.line);
  };
  std::stable_sort(report.selector_findings.begin(), report.selector_findings.end(), by_file_line);
  std::stable_sort(report.compliance_findings.begin(), report.compliance_findings.end(),
                   by_file_line);
  return report;
}

}  // namespace field_sentry::ext
