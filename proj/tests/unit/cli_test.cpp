#include <gtest/gtest.h>

#include <sstream>

#include "field_sentry/cli.hpp"
#include "field_sentry/instrument.hpp"
#include "field_sentry/page_audit.hpp"
#include "fixtures.hpp"

using namespace field_sentry;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string page(const std::string& name) { return (fixtures::dir("pages") / name).string(); }

}  // namespace

TEST(Cli, ScanPageMatchesLabels) {
  auto labels = fixtures::read_json(fixtures::dir("pages/labels.json"));
  for (const auto& [file, label] : labels.items()) {
    auto r = invoke({"--seed", "4", "--normalize-time", "scan-page", page(file)});
    EXPECT_EQ(r.code, label["exit"].get<int>()) << file << r.err;
    auto j = json::parse(r.out);
    const auto& t = j["targets"].at(0);
    EXPECT_EQ(t["is_login"], label["is_login"]) << file;
    EXPECT_EQ(t["has_password_field"], label["has_password_field"]) << file;
    json got = json::array();
    for (const auto& f : t["findings"]) got.push_back(json::array({f["field_kind"], f["kind"]}));
    EXPECT_EQ(got, label["findings"]) << file;
    EXPECT_EQ(t["markers"], label["markers"]) << file;
    EXPECT_EQ(j["created_at"], "1970-01-01T00:00:00Z");
  }
}

TEST(Cli, SeededRunsAreReproducible) {
  std::vector<std::string> args = {"--seed", "9", "--normalize-time", "--no-redact", "scan-page",
                                   page("type_a.html"), page("type_b_basic.html")};
  EXPECT_EQ(invoke(args).out, invoke(args).out);
  auto other = args;
  other[1] = "10";
  EXPECT_NE(invoke(other).out, invoke(args).out);
}

TEST(Cli, RedactsByDefault) {
  auto r = invoke({"--seed", "4", "scan-page", page("type_a.html")});
  EXPECT_EQ(r.out.find(audit::kProbePrefix), std::string::npos);
  auto raw = invoke({"--seed", "4", "--no-redact", "scan-page", page("type_a.html")});
  EXPECT_NE(raw.out.find(audit::kProbePrefix), std::string::npos);
}

TEST(Cli, CsvOutput) {
  auto r = invoke({"--format", "csv", "scan-page", page("type_b_basic.html")});
  EXPECT_TRUE(r.out.starts_with("target,field_locator,kind,evidence,secret_used,timestamp\r\n"));
}

TEST(Cli, AttackReplay) {
  auto tmp = fixtures::fs::temp_directory_path() / "fs_cli_directives.jsonl";
  fixtures::write(tmp, "{\"selector\": \"input[type=password]\", \"replacement_tag\": \"input\", \"replacement_type\": \"password\"}\n");
  for (const char* f : {"type_a.html", "type_b_basic.html", "protected_basic.html"}) {
    auto r = invoke({"--seed", "1", "attack-replay", page(f), "--directives", tmp.string()});
    EXPECT_EQ(r.code, cli::kExitFindings) << f << r.err;
    EXPECT_TRUE(json::parse(r.out)["results"][0]["succeeded"].get<bool>()) << f;
  }
  auto none = invoke({"attack-replay", page("article.html"), "--directives", tmp.string()});
  EXPECT_EQ(none.code, cli::kExitClean);
  fixtures::write(tmp, "{\"selector\": 5}\n");
  EXPECT_EQ(invoke({"attack-replay", page("type_a.html"), "--directives", tmp.string()}).code, cli::kExitError);
}

TEST(Cli, DetectCapture) {
  auto log = [](const char* f) { return (fixtures::dir("logs") / f).string(); };
  auto hit = invoke({"detect-capture", log("captured.log"), "--secret", "uniq-PW-9f3k2d8a"});
  EXPECT_EQ(hit.code, cli::kExitFindings);
  EXPECT_EQ(json::parse(hit.out)["matching_lines"][0]["line_no"], 2);
  EXPECT_EQ(invoke({"detect-capture", log("other_secret.log"), "--secret", "uniq-PW-9f3k2d8a"}).code, cli::kExitClean);
}

TEST(Cli, InstrumentWritesFile) {
  auto src = fixtures::dir("instrument") / "decl_query_all.js";
  auto dst = fixtures::fs::temp_directory_path() / "fs_cli_instrumented.js";
  auto r = invoke({"instrument", src.string(), "-o", dst.string()});
  EXPECT_EQ(r.code, cli::kExitClean) << r.err;
  EXPECT_EQ(fixtures::read(dst), instrument::instrument_source(fixtures::read(src)).text);
  EXPECT_EQ(invoke({"instrument", src.string()}).code, cli::kExitError);
}

TEST(Cli, ScanExtension) {
  auto dir = [](const char* e) { return (fixtures::dir("extensions") / e).string(); };
  EXPECT_EQ(invoke({"scan-extension", dir("clean_theme")}).code, cli::kExitClean);
  auto r = invoke({"scan-extension", dir("capturer"), dir("remote_loader")});
  EXPECT_EQ(r.code, cli::kExitFindings);
  EXPECT_EQ(json::parse(r.out)["targets"].size(), 2u);
}

TEST(Cli, ErrorsExitOne) {
  EXPECT_EQ(invoke({"scan-page", "/nonexistent/x.html"}).code, cli::kExitError);
  EXPECT_EQ(invoke({"--bogus"}).code, cli::kExitError);
  EXPECT_EQ(invoke({}).code, cli::kExitError);
}

TEST(Cli, BinaryExitCodes) {
  auto bin = fixtures::cli_path();
  if (bin.empty()) GTEST_SKIP() << "FS_CLI not set";
  EXPECT_EQ(fixtures::run(bin + " --help").status, 0);
  EXPECT_EQ(fixtures::run(bin + " scan-page " + page("type_a.html")).status, 2);
  EXPECT_EQ(fixtures::run(bin + " scan-page " + page("blank.html")).status, 0);
  EXPECT_EQ(fixtures::run(bin + " scan-page /nonexistent 2>/dev/null").status, 1);
}
