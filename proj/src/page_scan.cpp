#include "field_sentry/page_scan.hpp"

#include <algorithm>

#include "field_sentry/attack.hpp"

namespace field_sentry::scan {

PageScan scan_document(dom::Document& doc, std::mt19937_64& rng) {
  PageScan scan;
  scan.verdict = audit::detect_login_page(doc);
  scan.fields = audit::find_sensitive_fields(doc);
  if (!scan.verdict.is_login) scan.markers.emplace_back(kMarkerNotLogin);
  if (scan.fields.empty()) {
    scan.markers.emplace_back(kMarkerNoSensitiveFields);
    return scan;
  }
  bool identity_only = std::all_of(scan.fields.begin(), scan.fields.end(), [](const auto& f) {
    return f.kind == audit::FieldKind::Identity;
  });
  if (identity_only && !scan.verdict.has_password_field) {
    scan.markers.emplace_back(kMarkerNeedsDynamic);
    return scan;
  }

  audit::flag_sensitive_fields(doc, scan.fields);
  std::string avoid = dom::outer_html(doc.root());
  std::vector<std::string> secrets;
  for (const auto& field : scan.fields) {
    std::string secret = audit::make_probe_secret(rng, avoid);
    avoid += '\n';
    avoid += secret;
    dom::Node* node = doc.find_by_id(field.node_id);
    if (node) attack::simulate_typing(doc, *node, secret);
    secrets.push_back(std::move(secret));
  }
  for (std::size_t i = 0; i < scan.fields.size(); ++i) {
    scan.findings.push_back(audit::classify_field(doc, scan.fields[i], secrets[i]));
  }
  return scan;
}

PageScan scan_html(std::string_view html, std::mt19937_64& rng, std::string url) {
  dom::Document doc = dom::parse_html(html);
  if (!url.empty()) doc.source_url = std::move(url);
  return scan_document(doc, rng);
}

}  // namespace field_sentry::scan
