#include "field_sentry/report.hpp"

#include <json.hpp>

#include <chrono>
#include <ctime>
#include <set>

#include "field_sentry/error.hpp"

namespace field_sentry::report {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidReport, what); }

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

ordered_json rate_json(const Rate& r) {
  ordered_json j;
  j["numerator"] = r.numerator;
  j["denominator"] = r.denominator;
  j["percent"] = r.percent();
  j["undefined"] = r.undefined();
  return j;
}

ordered_json stats_json(const CorpusStats& s) {
  ordered_json j;
  j["sites_scanned"] = s.sites_scanned;
  j["login_pages_found"] = s.login_pages_found;
  j["pages_with_password_fields"] = s.pages_with_password_fields;
  j["type_a_sites"] = s.type_a_sites;
  j["type_a_count"] = s.type_a_count;
  j["type_b_count"] = s.type_b_count;
  j["type_b_presumed_count"] = s.type_b_presumed_count;
  j["protected_count"] = s.protected_count;
  j["fields_classified"] = s.fields_classified;
  j["extensions_scanned"] = s.extensions_scanned;
  j["class_all_pages"] = s.class_all_pages;
  j["class_some_pages"] = s.class_some_pages;
  j["class_no_injection"] = s.class_no_injection;
  j["flagged_static"] = s.flagged_static;
  j["flagged_dynamic"] = s.flagged_dynamic;
  ordered_json rates;
  rates["login_rate"] = rate_json(s.login_rate());
  rates["password_field_rate"] = rate_json(s.password_field_rate());
  rates["type_a_site_rate"] = rate_json(s.type_a_site_rate());
  rates["type_a_rate"] = rate_json(s.type_a_rate());
  rates["type_b_rate"] = rate_json(s.type_b_rate());
  rates["protected_rate"] = rate_json(s.protected_rate());
  rates["all_pages_rate"] = rate_json(s.all_pages_rate());
  rates["some_pages_rate"] = rate_json(s.some_pages_rate());
  rates["no_injection_rate"] = rate_json(s.no_injection_rate());
  rates["flagged_static_rate"] = rate_json(s.flagged_static_rate());
  rates["flagged_dynamic_rate"] = rate_json(s.flagged_dynamic_rate());
  j["rates"] = std::move(rates);
  return j;
}

ordered_json finding_json(const audit::VulnFinding& f) {
  ordered_json j;
  j["field_locator"] = f.field.locator;
  j["field_kind"] = audit::to_string(f.field.kind);
  ordered_json also = ordered_json::array();
  for (auto k : f.field.also_matches) also.push_back(audit::to_string(k));
  j["also_matches"] = std::move(also);
  j["node_id"] = f.field.node_id;
  j["masked_in_ui"] = f.field.masked_in_ui;
  j["kind"] = audit::to_string(f.kind);
  j["evidence"] = f.evidence;
  j["secret_used"] = f.secret_used;
  return j;
}

ordered_json extension_json(const ext::ExtensionReport& e) {
  ordered_json j;
  j["manifest_version"] = e.manifest_version;
  j["permission_class"] = ext::to_string(e.permission_class);
  j["flagged"] = e.flagged;
  j["content_scripts"] = e.content_scripts;
  ordered_json sel = ordered_json::array();
  for (const auto& f : e.selector_findings) {
    ordered_json o;
    o["file"] = f.file;
    o["line"] = f.line;
    o["call_name"] = f.call_name;
    o["literal"] = f.literal;
    o["matched_token"] = f.matched_token;
    sel.push_back(std::move(o));
  }
  j["selector_findings"] = std::move(sel);
  ordered_json comp = ordered_json::array();
  for (const auto& f : e.compliance_findings) {
    ordered_json o;
    o["file"] = f.file;
    o["line"] = f.line;
    o["kind"] = ext::to_string(f.kind);
    o["snippet"] = f.snippet;
    comp.push_back(std::move(o));
  }
  j["compliance_findings"] = std::move(comp);
  return j;
}

ordered_json target_json(const TargetRecord& t) {
  ordered_json j;
  j["id"] = t.id;
  j["kind"] = to_string(t.kind);
  j["outcome"] = t.outcome;
  j["url"] = t.url ? ordered_json(*t.url) : ordered_json(nullptr);
  j["is_login"] = t.is_login;
  j["has_password_field"] = t.has_password_field;
  j["markers"] = t.markers;
  ordered_json findings = ordered_json::array();
  for (const auto& f : t.findings) findings.push_back(finding_json(f));
  j["findings"] = std::move(findings);
  j["extension"] = t.extension ? extension_json(*t.extension) : ordered_json(nullptr);
  j["scanned_at"] = t.scanned_at;
  return j;
}

// Reading ------------------------------------------------------------------

const nlohmann::json& field(const nlohmann::json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) invalid(std::string("missing '") + key + "'");
  return j.at(key);
}

std::string str(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_string()) invalid(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

bool boolean(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_boolean()) invalid(std::string("'") + key + "' must be a boolean");
  return v.get<bool>();
}

int integer(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_number_integer()) invalid(std::string("'") + key + "' must be an integer");
  return v.get<int>();
}

const nlohmann::json& array(const nlohmann::json& j, const char* key) {
  const auto& v = field(j, key);
  if (!v.is_array()) invalid(std::string("'") + key + "' must be an array");
  return v;
}

std::vector<std::string> strings(const nlohmann::json& j, const char* key) {
  std::vector<std::string> out;
  for (const auto& v : array(j, key)) {
    if (!v.is_string()) invalid(std::string("'") + key + "' must hold strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

audit::FieldKind field_kind(const std::string& s) {
  auto k = audit::field_kind_from_string(s);
  if (!k) invalid("unknown field kind " + s);
  return *k;
}

audit::VulnFinding read_finding(const nlohmann::json& j) {
  audit::VulnFinding f;
  f.field.locator = str(j, "field_locator");
  f.field.kind = field_kind(str(j, "field_kind"));
  for (const auto& s : strings(j, "also_matches")) f.field.also_matches.push_back(field_kind(s));
  f.field.node_id = integer(j, "node_id");
  f.field.masked_in_ui = boolean(j, "masked_in_ui");
  auto kind = audit::vuln_kind_from_string(str(j, "kind"));
  if (!kind) invalid("unknown finding kind");
  f.kind = *kind;
  f.evidence = str(j, "evidence");
  f.secret_used = str(j, "secret_used");
  return f;
}

ext::ExtensionReport read_extension(const nlohmann::json& j) {
  ext::ExtensionReport e;
  e.manifest_version = integer(j, "manifest_version");
  try {
    e.permission_class = ext::permission_class_from_string(str(j, "permission_class"));
  } catch (const Error& err) {
    invalid(err.what());
  }
  e.flagged = boolean(j, "flagged");
  e.content_scripts = strings(j, "content_scripts");
  for (const auto& o : array(j, "selector_findings")) {
    e.selector_findings.push_back({str(o, "file"), integer(o, "line"), str(o, "call_name"),
                                   str(o, "literal"), str(o, "matched_token")});
  }
  for (const auto& o : array(j, "compliance_findings")) {
    ext::ComplianceFinding f;
    f.file = str(o, "file");
    f.line = integer(o, "line");
    try {
      f.kind = ext::compliance_kind_from_string(str(o, "kind"));
    } catch (const Error& err) {
      invalid(err.what());
    }
    f.snippet = str(o, "snippet");
    e.compliance_findings.push_back(std::move(f));
  }
  return e;
}

TargetRecord target_from_json(const nlohmann::json& j) {
  TargetRecord t;
  t.id = str(j, "id");
  std::string kind = str(j, "kind");
  if (kind == "page") {
    t.kind = TargetKind::Page;
  } else if (kind == "extension") {
    t.kind = TargetKind::Extension;
  } else {
    invalid("unknown target kind " + kind);
  }
  t.outcome = str(j, "outcome");
  const auto& url = field(j, "url");
  if (url.is_string()) {
    t.url = url.get<std::string>();
  } else if (!url.is_null()) {
    invalid("'url' must be a string or null");
  }
  t.is_login = boolean(j, "is_login");
  t.has_password_field = boolean(j, "has_password_field");
  t.markers = strings(j, "markers");
  for (const auto& f : array(j, "findings")) t.findings.push_back(read_finding(f));
  const auto& extension = field(j, "extension");
  if (extension.is_object()) {
    t.extension = read_extension(extension);
    t.extension->id = t.id;
  } else if (!extension.is_null()) {
    invalid("'extension' must be an object or null");
  }
  t.scanned_at = str(j, "scanned_at");
  return t;
}

void add_target(CorpusStats& s, const TargetRecord& t) {
  if (t.kind == TargetKind::Page) {
    ++s.sites_scanned;
    if (t.is_login) ++s.login_pages_found;
    if (t.has_password_field) ++s.pages_with_password_fields;
    bool any_a = false;
    for (const auto& f : t.findings) {
      ++s.fields_classified;
      switch (f.kind) {
        case audit::VulnKind::TypeA: ++s.type_a_count; any_a = true; break;
        case audit::VulnKind::TypeB: ++s.type_b_count; break;
        case audit::VulnKind::TypeBPresumed: ++s.type_b_presumed_count; break;
        case audit::VulnKind::Protected: ++s.protected_count; break;
      }
    }
    if (any_a) ++s.type_a_sites;
    return;
  }
  ++s.extensions_scanned;
  auto cls = t.extension ? t.extension->permission_class : ext::PermissionClass::NoInjection;
  switch (cls) {
    case ext::PermissionClass::AllPages: ++s.class_all_pages; break;
    case ext::PermissionClass::SomePages: ++s.class_some_pages; break;
    case ext::PermissionClass::NoInjection: ++s.class_no_injection; break;
  }
  if (t.extension && t.extension->flagged) ++s.flagged_static;
  for (const auto& m : t.markers) {
    if (m == kMarkerCapturedDynamic) {
      ++s.flagged_dynamic;
      break;
    }
  }
}

}  // namespace

std::string_view to_string(TargetKind kind) {
  return kind == TargetKind::Page ? "page" : "extension";
}

double Rate::value() const {
  return denominator == 0 ? 0.0 : static_cast<double>(numerator) / static_cast<double>(denominator);
}

std::string Rate::percent() const {
  if (denominator == 0) return "0.0%";
  // tenths of a percent, rounded half up
  std::uint64_t tenths = (numerator * 2000 + denominator) / (2 * denominator);
  return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10) + "%";
}

CorpusStats aggregate(const std::vector<ScanReport>& reports) {
  CorpusStats stats;
  std::set<std::string> seen;
  for (const auto& report : reports) {
    for (const auto& t : report.targets) {
      if (!seen.insert(t.id).second) throw Error(ErrorCode::DuplicateTarget, t.id);
      add_target(stats, t);
    }
  }
  return stats;
}

CorpusStats merge(const CorpusStats& a, const CorpusStats& b) {
  CorpusStats s;
  s.sites_scanned = a.sites_scanned + b.sites_scanned;
  s.login_pages_found = a.login_pages_found + b.login_pages_found;
  s.pages_with_password_fields = a.pages_with_password_fields + b.pages_with_password_fields;
  s.type_a_sites = a.type_a_sites + b.type_a_sites;
  s.type_a_count = a.type_a_count + b.type_a_count;
  s.type_b_count = a.type_b_count + b.type_b_count;
  s.type_b_presumed_count = a.type_b_presumed_count + b.type_b_presumed_count;
  s.protected_count = a.protected_count + b.protected_count;
  s.fields_classified = a.fields_classified + b.fields_classified;
  s.extensions_scanned = a.extensions_scanned + b.extensions_scanned;
  s.class_all_pages = a.class_all_pages + b.class_all_pages;
  s.class_some_pages = a.class_some_pages + b.class_some_pages;
  s.class_no_injection = a.class_no_injection + b.class_no_injection;
  s.flagged_static = a.flagged_static + b.flagged_static;
  s.flagged_dynamic = a.flagged_dynamic + b.flagged_dynamic;
  return s;
}

ScanReport merge_reports(const std::vector<ScanReport>& reports) {
  ScanReport out;
  std::set<std::string> seen;
  for (const auto& report : reports) {
    if (report.created_at > out.created_at) out.created_at = report.created_at;
    for (const auto& t : report.targets) {
      if (!seen.insert(t.id).second) throw Error(ErrorCode::DuplicateTarget, t.id);
      out.targets.push_back(t);
    }
  }
  if (!reports.empty()) out.tool_version = reports.front().tool_version;
  return out;
}

ScanReport redacted(const ScanReport& report) {
  ScanReport out = report;
  for (auto& t : out.targets) {
    for (auto& f : t.findings) {
      if (f.secret_used.empty() || f.secret_used == kRedacted) continue;
      f.evidence = replace_all(f.evidence, f.secret_used, kRedacted);
      f.secret_used = std::string(kRedacted);
    }
  }
  return out;
}

ScanReport normalized(const ScanReport& report, std::string_view stamp) {
  ScanReport out = report;
  out.created_at = std::string(stamp);
  for (auto& t : out.targets) t.scanned_at = std::string(stamp);
  return out;
}

Format format_from_string(std::string_view s) {
  if (s == "json") return Format::Json;
  if (s == "csv") return Format::Csv;
  throw Error(ErrorCode::InvalidArgument, "unknown format " + std::string(s));
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string write_report(const ScanReport& input, const WriteOptions& options) {
  const ScanReport report = options.redact ? redacted(input) : input;
  if (options.format == Format::Csv) {
    std::string out = "target,field_locator,kind,evidence,secret_used,timestamp\r\n";
    auto row = [&](std::initializer_list<std::string_view> cells) {
      bool first = true;
      for (auto c : cells) {
        if (!first) out += ',';
        out += csv_escape(c);
        first = false;
      }
      out += "\r\n";
    };
    for (const auto& t : report.targets) {
      for (const auto& f : t.findings) {
        row({t.id, f.field.locator, audit::to_string(f.kind), f.evidence, f.secret_used, t.scanned_at});
      }
      if (!t.extension) continue;
      for (const auto& f : t.extension->selector_findings) {
        std::string where = f.file + ":" + std::to_string(f.line);
        std::string evidence = f.call_name + "(\"" + f.literal + "\")";
        row({t.id, where, "InputSelection", evidence, "", t.scanned_at});
      }
      for (const auto& f : t.extension->compliance_findings) {
        std::string where = f.file + ":" + std::to_string(f.line);
        row({t.id, where, ext::to_string(f.kind), f.snippet, "", t.scanned_at});
      }
    }
    return out;
  }
  ordered_json j;
  j["tool_version"] = report.tool_version;
  j["created_at"] = report.created_at;
  ordered_json targets = ordered_json::array();
  for (const auto& t : report.targets) targets.push_back(target_json(t));
  j["targets"] = std::move(targets);
  j["summary"] = stats_json(aggregate({report}));
  return j.dump(2) + "\n";
}

std::string write_stats(const CorpusStats& stats, Format format) {
  if (format == Format::Json) return stats_json(stats).dump(2) + "\n";
  std::string out = "metric,value\r\n";
  auto flat = stats_json(stats);
  for (const auto& [key, value] : flat.items()) {
    if (key == "rates") continue;
    out += key + "," + value.dump() + "\r\n";
  }
  for (const auto& [key, value] : flat["rates"].items()) {
    std::string shown = value["percent"].get<std::string>();
    if (value["undefined"].get<bool>()) shown += " (undefined)";
    out += key + "," + csv_escape(shown) + "\r\n";
  }
  return out;
}

ScanReport read_report(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    invalid(e.what());
  }
  ScanReport report;
  report.tool_version = str(j, "tool_version");
  report.created_at = str(j, "created_at");
  std::set<std::string> seen;
  for (const auto& t : array(j, "targets")) {
    report.targets.push_back(target_from_json(t));
    if (!seen.insert(report.targets.back().id).second) {
      throw Error(ErrorCode::DuplicateTarget, report.targets.back().id);
    }
  }
  return report;
}

std::string write_target(const TargetRecord& target) { return target_json(target).dump(); }

TargetRecord read_target(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    invalid(e.what());
  }
  return target_from_json(j);
}

std::string now_rfc3339() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool has_findings(const ScanReport& report) {
  for (const auto& t : report.targets) {
    for (const auto& f : t.findings) {
      if (f.kind != audit::VulnKind::Protected) return true;
    }
    if (t.extension && (t.extension->flagged || !t.extension->compliance_findings.empty())) {
      return true;
    }
    for (const auto& m : t.markers) {
      if (m == kMarkerCapturedDynamic) return true;
    }
  }
  return false;
}

}  // namespace field_sentry::report
