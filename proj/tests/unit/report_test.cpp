#include <gtest/gtest.h>

#include <cstdlib>
#include <random>

#include "field_sentry/error.hpp"
#include "field_sentry/report.hpp"

using namespace field_sentry;
using report::Rate;
using report::TargetKind;
using report::TargetRecord;

namespace {

// Closest tenth by exhaustive search, ties going up.
std::string percent_oracle(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return "0.0%";
  std::uint64_t best = 0;
  long double best_gap = 0;
  for (std::uint64_t t = 0; t <= 1000; ++t) {
    long double gap = std::abs(static_cast<long double>(num) * 1000 - static_cast<long double>(t) * den);
    if (t == 0 || gap <= best_gap) {
      best = t;
      best_gap = gap;
    }
  }
  return std::to_string(best / 10) + "." + std::to_string(best % 10) + "%";
}

audit::VulnFinding finding(audit::VulnKind kind, const std::string& secret = "uniq-PW-abcd1234") {
  audit::VulnFinding f;
  f.field.node_id = 7;
  f.field.locator = "form > input:nth-of-type(2)";
  f.kind = kind;
  f.secret_used = secret;
  f.evidence = "<input value=\"" + secret + "\">";
  return f;
}

TargetRecord page(const std::string& id, std::vector<audit::VulnKind> kinds, bool login = true) {
  TargetRecord t;
  t.id = id;
  t.outcome = login ? "LoginFound" : "NoLoginFound";
  t.url = "https://" + id + "/login";
  t.is_login = login;
  t.has_password_field = login && !kinds.empty();
  for (auto k : kinds) t.findings.push_back(finding(k));
  return t;
}

TargetRecord extension(const std::string& id, ext::PermissionClass cls, bool flagged, bool dynamic = false) {
  TargetRecord t;
  t.id = id;
  t.kind = TargetKind::Extension;
  ext::ExtensionReport e;
  e.id = id;
  e.permission_class = cls;
  e.flagged = flagged;
  if (flagged) e.selector_findings.push_back({"content.js", 3, "querySelectorAll", "input[type=password]", "input"});
  t.extension = e;
  if (dynamic) t.markers.push_back(std::string(report::kMarkerCapturedDynamic));
  return t;
}

report::ScanReport random_report(std::mt19937_64& rng) {
  const std::vector<std::string> pool = {"a", "b", ",", "\"", "\n", "\r", "<", ">", "&", "\u00e9", "\\", "/", "\t", " ", "z"};
  auto text = [&] {
    std::string s;
    for (int i = rng() % 12; i > 0; --i) s += pool[rng() % pool.size()];
    return s;
  };
  report::ScanReport r;
  r.created_at = "2026-01-0" + std::to_string(1 + rng() % 9) + "T10:00:00Z";
  int n = 1 + rng() % 5;
  for (int i = 0; i < n; ++i) {
    TargetRecord t;
    t.id = "t" + std::to_string(i) + text();
    t.scanned_at = r.created_at;
    if (rng() % 3 == 0) {
      t = extension(t.id, static_cast<ext::PermissionClass>(rng() % 3), rng() % 2, rng() % 2);
      t.extension->content_scripts = {"a.js", text()};
      if (rng() % 2) t.extension->compliance_findings.push_back({"bg.js", 6, ext::ComplianceKind::RemoteFetchEval, text()});
    } else {
      t.outcome = "LoginFound";
      t.url = "https://x/" + text();
      t.is_login = true;
      t.has_password_field = rng() % 2;
      for (int k = rng() % 3; k > 0; --k) {
        auto f = finding(static_cast<audit::VulnKind>(rng() % 4), "uniq-PW-" + std::to_string(rng() % 100000000));
        f.evidence += text();
        f.field.kind = static_cast<audit::FieldKind>(rng() % 4);
        f.field.masked_in_ui = rng() % 2;
        if (rng() % 2) f.field.also_matches = {audit::FieldKind::Identity};
        t.findings.push_back(f);
      }
      if (rng() % 4 == 0) t.markers = {"FetchFailed:" + text()};
    }
    r.targets.push_back(t);
  }
  return r;
}

}  // namespace

TEST(Rate, PercentMatchesOracle) {
  for (std::uint64_t den = 0; den <= 300; ++den) {
    for (std::uint64_t num = 0; num <= den; ++num) {
      ASSERT_EQ((Rate{num, den}.percent()), percent_oracle(num, den)) << num << "/" << den;
    }
  }
  EXPECT_EQ((Rate{1, 8}.percent()), "12.5%");
  EXPECT_EQ((Rate{1, 16}.percent()), "6.3%");
  EXPECT_EQ((Rate{2, 3}.percent()), "66.7%");
  EXPECT_TRUE((Rate{0, 0}.undefined()));
}

TEST(Aggregate, CountsPerKind) {
  report::ScanReport a;
  a.targets = {page("a.test", {audit::VulnKind::TypeA, audit::VulnKind::TypeB}),
               page("b.test", {audit::VulnKind::TypeBPresumed, audit::VulnKind::Protected}),
               page("c.test", {}, false)};
  report::ScanReport b;
  b.targets = {extension("e1", ext::PermissionClass::AllPages, true, true),
               extension("e2", ext::PermissionClass::SomePages, false),
               extension("e3", ext::PermissionClass::NoInjection, false)};
  auto s = report::aggregate({a, b});
  EXPECT_EQ(s.sites_scanned, 3u);
  EXPECT_EQ(s.login_pages_found, 2u);
  EXPECT_EQ(s.pages_with_password_fields, 2u);
  EXPECT_EQ(s.type_a_sites, 1u);
  EXPECT_EQ(s.fields_classified, 4u);
  EXPECT_EQ(s.type_b_rate().percent(), "50.0%");
  EXPECT_EQ(s.protected_rate().percent(), "25.0%");
  EXPECT_EQ(s.type_a_site_rate().percent(), "50.0%");
  EXPECT_EQ(s.login_rate().percent(), "66.7%");
  EXPECT_EQ(s.extensions_scanned, 3u);
  EXPECT_EQ(s.class_all_pages + s.class_some_pages + s.class_no_injection, 3u);
  EXPECT_EQ(s.flagged_static, 1u);
  EXPECT_EQ(s.flagged_dynamic, 1u);
  EXPECT_EQ(report::merge(report::aggregate({a}), report::aggregate({b})), s);
}

TEST(Aggregate, DuplicatesRejected) {
  report::ScanReport a;
  a.targets = {page("a.test", {})};
  for (auto f : {+[](const report::ScanReport& r) { report::aggregate({r, r}); },
                 +[](const report::ScanReport& r) { report::merge_reports({r, r}); }}) {
    try {
      f(a);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::DuplicateTarget);
    }
  }
}

TEST(Report, MergeKeepsOrder) {
  report::ScanReport a, b;
  a.targets = {page("z.test", {}), page("a.test", {})};
  b.targets = {page("m.test", {})};
  b.created_at = "2026-05-01T00:00:00Z";
  auto m = report::merge_reports({a, b});
  ASSERT_EQ(m.targets.size(), 3u);
  EXPECT_EQ(m.targets[0].id, "z.test");
  EXPECT_EQ(m.targets[2].id, "m.test");
  EXPECT_EQ(m.created_at, b.created_at);
}

TEST(Report, RedactionHidesSecrets) {
  report::ScanReport r;
  r.targets = {page("a.test", {audit::VulnKind::TypeA})};
  std::string secret = r.targets[0].findings[0].secret_used;
  auto json = report::write_report(r);
  EXPECT_EQ(json.find(secret), std::string::npos);
  EXPECT_NE(json.find(report::kRedacted), std::string::npos);
  EXPECT_NE(report::write_report(r, {report::Format::Json, false}).find(secret), std::string::npos);
  EXPECT_EQ(report::write_report(r, {report::Format::Csv, true}).find(secret), std::string::npos);
  EXPECT_EQ(report::redacted(report::redacted(r)), report::redacted(r));
}

TEST(Report, NormalizedStamps) {
  std::mt19937_64 rng(5);
  auto r = report::normalized(random_report(rng));
  EXPECT_EQ(r.created_at, report::kEpoch);
  for (const auto& t : r.targets) EXPECT_EQ(t.scanned_at, report::kEpoch);
}

TEST(Report, JsonRoundTrip) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 300; ++i) {
    auto r = random_report(rng);
    auto back = report::read_report(report::write_report(r, {report::Format::Json, false}));
    ASSERT_EQ(back, r) << report::write_report(r, {report::Format::Json, false});
    for (const auto& t : r.targets) ASSERT_EQ(report::read_target(report::write_target(t)), t);
  }
}

TEST(Report, ReadRejectsGarbage) {
  for (const char* bad : {"", "{", "[]", R"({"tool_version": 1})", R"({"tool_version": "0.1.0", "created_at": "x", "targets": [{"id": 3}]})"}) {
    try {
      report::read_report(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidReport) << bad;
    }
  }
}

TEST(Csv, EscapeRoundTripsThroughRfc4180Reader) {
  // Minimal quoted-field reader.
  auto unescape = [](const std::string& s) {
    if (s.empty() || s[0] != '"') return s;
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      out += s[i];
      if (s[i] == '"') ++i;
    }
    return out;
  };
  for (std::string v : {"", "plain", "a,b", "say \"hi\"", "line\nbreak", "cr\r", "\"", ",,"}) {
    auto e = report::csv_escape(v);
    EXPECT_EQ(unescape(e), v);
    if (v.find_first_of(",\"\r\n") == std::string::npos) EXPECT_EQ(e, v);
  }
}

TEST(Csv, RowsForFindingsAndExtensions) {
  report::ScanReport r;
  r.targets = {page("a.test", {audit::VulnKind::TypeA, audit::VulnKind::Protected}),
               extension("e1", ext::PermissionClass::AllPages, true)};
  auto csv = report::write_report(r, {report::Format::Csv, true});
  EXPECT_TRUE(csv.starts_with("target,field_locator,kind,evidence,secret_used,timestamp\r\n"));
  std::size_t rows = 0;
  for (std::size_t p = 0; (p = csv.find("\r\n", p)) != std::string::npos; p += 2) ++rows;
  EXPECT_EQ(rows, 4u);
  EXPECT_NE(csv.find("e1,content.js:3,InputSelection"), std::string::npos);
}

TEST(Report, HasFindings) {
  report::ScanReport r;
  r.targets = {page("a.test", {audit::VulnKind::Protected}), extension("e", ext::PermissionClass::AllPages, false)};
  EXPECT_FALSE(report::has_findings(r));
  r.targets.push_back(page("b.test", {audit::VulnKind::TypeBPresumed}));
  EXPECT_TRUE(report::has_findings(r));
  r.targets.pop_back();
  r.targets.push_back(extension("f", ext::PermissionClass::NoInjection, false, true));
  EXPECT_TRUE(report::has_findings(r));
  r.targets.pop_back();
  r.targets[1].extension->compliance_findings.push_back({"bg.js", 1, ext::ComplianceKind::EvalCall, "eval(x)"});
  EXPECT_TRUE(report::has_findings(r));
}

TEST(Stats, CsvMarksUndefinedRates) {
  report::CorpusStats s;
  s.sites_scanned = 4;
  s.login_pages_found = 1;
  auto csv = report::write_stats(s, report::Format::Csv);
  EXPECT_NE(csv.find("25.0%"), std::string::npos);
  EXPECT_NE(csv.find("0.0% (undefined)"), std::string::npos);
}
