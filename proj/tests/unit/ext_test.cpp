#include <gtest/gtest.h>

#include "field_sentry/archive.hpp"
#include "field_sentry/error.hpp"
#include "field_sentry/ext.hpp"
#include "fixtures.hpp"
#include "js_grammar.hpp"
#include "pack_crx.hpp"

using namespace field_sentry;
using ext::ComplianceKind;
using ext::PermissionClass;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

std::vector<archive::Entry> dir_entries(const fixtures::fs::path& dir) {
  std::vector<archive::Entry> out;
  for (const auto& e : fixtures::fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) {
      out.push_back({fixtures::fs::relative(e.path(), dir).generic_string(), fixtures::read(e.path())});
    }
  }
  std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.path < b.path; });
  return out;
}

}  // namespace

TEST(Manifest, HandAuthoredLabels) {
  auto labels = fixtures::read_json(fixtures::dir("manifests/labels.json"));
  ASSERT_EQ(labels.size(), 12u);
  int mv2 = 0;
  for (const auto& [file, want] : labels.items()) {
    auto m = ext::parse_manifest(fixtures::read(fixtures::dir("manifests") / file));
    mv2 += m.manifest_version == 2;
    EXPECT_EQ(ext::to_string(ext::classify_permissions(m)), want.get<std::string>()) << file;
  }
  EXPECT_GE(mv2, 3);
}

TEST(Manifest, HostPatternsBySource) {
  auto mv2 = ext::parse_manifest(R"({"manifest_version": 2, "permissions": ["tabs", "https://a.com/*", "<all_urls>"]})");
  EXPECT_EQ(mv2.api_permissions, (std::set<std::string>{"tabs"}));
  EXPECT_EQ(mv2.host_permissions, (std::set<std::string>{"https://a.com/*", "<all_urls>"}));
  auto mv3 = ext::parse_manifest(
      R"({"manifest_version": 3, "permissions": ["storage"], "host_permissions": ["*://*/*"],
          "content_scripts": [{"matches": ["https://x/*"], "js": ["./a.js", "a.js", "b.js"]}],
          "background": {"service_worker": "sw.js"}})");
  EXPECT_EQ(mv3.host_permissions, (std::set<std::string>{"*://*/*"}));
  EXPECT_EQ(mv3.content_script_files, (std::vector<std::string>{"a.js", "b.js"}));
  EXPECT_EQ(mv3.background_files, (std::vector<std::string>{"sw.js"}));
}

TEST(Manifest, Invalid) {
  for (const char* bad : {"", "[]", "{", R"({"name": "x"})", R"({"manifest_version": 4})",
                          R"({"manifest_version": 3, "permissions": "tabs"})",
                          R"({"manifest_version": 3, "content_scripts": {}})"}) {
    EXPECT_EQ(code_of([&] { ext::parse_manifest(bad); }), ErrorCode::InvalidManifest) << bad;
  }
}

TEST(Manifest, BasicExamples) {
  ext::ManifestSummary m;
  m.content_script_matches = {"<all_urls>"};
  EXPECT_EQ(ext::classify_permissions(m), PermissionClass::AllPages);
  ext::ManifestSummary s;
  s.api_permissions = {"scripting"};
  s.host_permissions = {"*://*/*"};
  EXPECT_EQ(ext::classify_permissions(s), PermissionClass::AllPages);
  ext::ManifestSummary none;
  none.api_permissions = {"storage"};
  EXPECT_EQ(ext::classify_permissions(none), PermissionClass::NoInjection);
}

TEST(Manifest, MonotoneUnderAddedPermissions) {
  std::mt19937_64 rng(12);
  const std::vector<std::string> apis = {"storage", "tabs", "scripting", "activeTab", "cookies"};
  const std::vector<std::string> hosts = {"<all_urls>", "*://*/*", "http://*/*", "https://*/*",
                                          "https://a.example/*", "*://b.example/*"};
  auto pick = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  for (int i = 0; i < 5000; ++i) {
    ext::ManifestSummary m;
    m.manifest_version = i % 2 ? 2 : 3;
    auto before = ext::classify_permissions(m);
    for (int step = 0; step < 6; ++step) {
      switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
        case 0: m.api_permissions.insert(pick(apis)); break;
        case 1: m.host_permissions.insert(pick(hosts)); break;
        default: m.content_script_matches.insert(pick(hosts)); break;
      }
      auto after = ext::classify_permissions(m);
      ASSERT_GE(static_cast<int>(after), static_cast<int>(before));
      before = after;
    }
  }
}

// --- static scan -------------------------------------------------------------

TEST(StaticScan, KnownPositives) {
  auto expected = fixtures::read_json(fixtures::dir("js/expected_static.json"));
  for (const auto& [file, rows] : expected.items()) {
    auto got = ext::static_scan(fixtures::read(fixtures::dir("js") / file), file);
    ASSERT_EQ(got.size(), rows.size()) << file;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      EXPECT_EQ(got[k].line, rows[k][0].get<int>());
      EXPECT_EQ(got[k].call_name, rows[k][1].get<std::string>());
      EXPECT_EQ(got[k].literal, rows[k][2].get<std::string>());
      EXPECT_EQ(got[k].matched_token, "input");
      EXPECT_EQ(got[k].file, file);
    }
  }
  EXPECT_EQ(ext::static_scan(R"(document.querySelectorAll("input[type=password]"))").size(), 1u);
  EXPECT_EQ(ext::static_scan(R"(document.querySelector(".button"))").size(), 0u);
  EXPECT_EQ(ext::static_scan(R"(getElementById("INPUT_user"))").size(), 1u);
}

TEST(StaticScan, CleanCorpusHasNoFindings) {
  int files = 0;
  for (const auto& e : fixtures::fs::directory_iterator(fixtures::dir("js/clean"))) {
    EXPECT_TRUE(ext::static_scan(fixtures::read(e.path())).empty()) << e.path();
    ++files;
  }
  EXPECT_EQ(files, 5);
}

TEST(StaticScan, GeneratedSourcesMatchGroundTruth) {
  oracle::JsGrammar g(20240501);
  std::size_t positives = 0;
  for (int i = 0; i < 600; ++i) {
    auto prog = g.program();
    auto got = ext::static_scan(prog.source);
    std::vector<oracle::JsFinding> mapped;
    for (const auto& f : got) mapped.push_back({f.line, f.call_name, f.literal});
    ASSERT_EQ(mapped, prog.findings) << prog.source;
    positives += prog.findings.size();
  }
  EXPECT_GT(positives, 300u);
}

// --- compliance scan ---------------------------------------------------------

TEST(Compliance, FetchThenEvalSkeleton) {
  auto got = ext::compliance_scan(fixtures::read(fixtures::dir("js/fetch_eval.js")));
  ASSERT_EQ(got.size(), 1u);
  EXPECT_EQ(got[0].kind, ComplianceKind::RemoteFetchEval);
  EXPECT_EQ(got[0].line, 6);
  EXPECT_EQ(got[0].snippet, "eval(code);");
}

TEST(Compliance, EvalFreeCorpus) {
  for (const auto& e : fixtures::fs::recursive_directory_iterator(fixtures::dir("js"))) {
    if (e.path().extension() != ".js" || e.path().filename() == "fetch_eval.js") continue;
    EXPECT_TRUE(ext::compliance_scan(fixtures::read(e.path())).empty()) << e.path();
  }
}

TEST(Compliance, Signatures) {
  auto kinds = [](std::string_view src) {
    std::vector<ComplianceKind> out;
    for (const auto& f : ext::compliance_scan(src)) out.push_back(f.kind);
    return out;
  };
  EXPECT_EQ(kinds("eval('1+1');"), std::vector<ComplianceKind>{ComplianceKind::EvalCall});
  EXPECT_EQ(kinds("var f = new Function('a', 'return a');"),
            std::vector<ComplianceKind>{ComplianceKind::FunctionConstructor});
  EXPECT_EQ(kinds("window.eval(x);"), std::vector<ComplianceKind>{ComplianceKind::EvalCall});
  EXPECT_TRUE(kinds("obj.eval(x); // eval(y)\nvar s = 'eval(z)'; function eval2() {}").empty());
  EXPECT_EQ(kinds("var xhr = new XMLHttpRequest();\nxhr.onload = function () { eval(xhr.responseText); };"),
            std::vector<ComplianceKind>{ComplianceKind::RemoteFetchEval});
  EXPECT_EQ(kinds("const r = await fetch(u);\nconst body = await r.text();\neval(body);"),
            std::vector<ComplianceKind>{ComplianceKind::RemoteFetchEval});
  EXPECT_EQ(kinds("fetch(u).then(r => r.text()).then(t => eval(t));"),
            std::vector<ComplianceKind>{ComplianceKind::RemoteFetchEval});
}

// --- packages ----------------------------------------------------------------

TEST(Package, DirectoryZipAndCrxAgree) {
  auto dir = fixtures::dir("extensions/capturer");
  auto from_dir = ext::load_extension(dir);
  auto zip = archive::write_zip(dir_entries(dir));
  auto from_zip = ext::load_extension_bytes(zip, "capturer");
  auto from_crx = ext::load_extension_bytes(oracle::pack_crx(zip), "capturer");
  EXPECT_EQ(from_dir.manifest, from_zip.manifest);
  EXPECT_EQ(from_dir.manifest, from_crx.manifest);
  EXPECT_EQ(from_dir.scripts, from_crx.scripts);
  EXPECT_EQ(from_dir.id, "capturer");
  EXPECT_TRUE(from_dir.is_content_script("./content.js"));
  EXPECT_FALSE(from_dir.is_content_script("sw.js"));
}

TEST(Package, CrxRoundTripOnEveryFixtureManifest) {
  for (const auto& e : fixtures::fs::directory_iterator(fixtures::dir("manifests"))) {
    if (e.path().filename() == "labels.json") continue;
    std::string text = fixtures::read(e.path());
    auto zip = archive::write_zip({{"manifest.json", text}, {"content.js", "var x = 1;\n"}});
    auto pkg = ext::load_extension_bytes(oracle::pack_crx(zip), "x");
    EXPECT_EQ(pkg.manifest, ext::parse_manifest(text)) << e.path();
  }
}

TEST(Package, CrxErrors) {
  auto zip = archive::write_zip({{"manifest.json", R"({"manifest_version": 3})"}});
  EXPECT_EQ(code_of([&] { ext::load_extension_bytes(oracle::pack_crx(zip, 2), "x"); }),
            ErrorCode::UnsupportedCrxVersion);
  EXPECT_EQ(code_of([&] { ext::load_extension_bytes(oracle::pack_crx(zip, 4), "x"); }),
            ErrorCode::UnsupportedCrxVersion);
  std::string truncated = oracle::pack_crx(zip).substr(0, 10);
  EXPECT_EQ(code_of([&] { ext::load_extension_bytes(truncated, "x"); }), ErrorCode::MalformedArchive);
  auto no_manifest = archive::write_zip({{"a.js", "1"}});
  EXPECT_EQ(code_of([&] { ext::load_extension_bytes(no_manifest, "x"); }), ErrorCode::NoManifest);
  EXPECT_EQ(code_of([&] { ext::load_extension_bytes("not an archive", "x"); }), ErrorCode::MalformedArchive);
  EXPECT_EQ(code_of([&] { ext::load_extension(fixtures::dir("does-not-exist")); }), ErrorCode::Io);
}

TEST(Package, ZipStoredAndDeflatedRoundTrip) {
  std::vector<archive::Entry> entries = {{"a.txt", "hello"}, {"dir/b.bin", std::string(5000, 'z')}, {"empty", ""}};
  EXPECT_EQ(archive::read_zip(archive::write_zip(entries, true)), entries);
  EXPECT_EQ(archive::read_zip(archive::write_zip(entries, false)), entries);
  EXPECT_EQ(archive::write_zip(entries), archive::write_zip(entries));
}

TEST(Package, AnalyzeFixtures) {
  auto capturer = ext::analyze_package(ext::load_extension(fixtures::dir("extensions/capturer")));
  EXPECT_EQ(capturer.permission_class, PermissionClass::AllPages);
  EXPECT_TRUE(capturer.flagged);
  ASSERT_EQ(capturer.selector_findings.size(), 1u);
  EXPECT_EQ(capturer.selector_findings[0].file, "content.js");

  auto theme = ext::analyze_package(ext::load_extension(fixtures::dir("extensions/clean_theme")));
  EXPECT_EQ(theme.permission_class, PermissionClass::SomePages);
  EXPECT_FALSE(theme.flagged);
  EXPECT_TRUE(theme.compliance_findings.empty());

  auto loader = ext::analyze_package(ext::load_extension(fixtures::dir("extensions/remote_loader")));
  EXPECT_EQ(loader.manifest_version, 2);
  ASSERT_EQ(loader.compliance_findings.size(), 1u);
  EXPECT_EQ(loader.compliance_findings[0].kind, ComplianceKind::RemoteFetchEval);
  EXPECT_EQ(loader.compliance_findings[0].file, "bg.js");
}
