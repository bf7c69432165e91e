#include "field_sentry/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "field_sentry/attack.hpp"
#include "field_sentry/crawl.hpp"
#include "field_sentry/error.hpp"
#include "field_sentry/instrument.hpp"
#include "field_sentry/page_scan.hpp"
#include "field_sentry/report.hpp"
#include "field_sentry/text.hpp"

namespace field_sentry::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct Common {
  std::string output;
  std::string format = "json";
  bool redact = true;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool normalize_time = false;
  int verbose = 0;
  crawl::FetchPolicy policy;
  bool no_robots = false;
};

bool is_url(std::string_view s) { return s.starts_with("http://") || s.starts_with("https://"); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  if (from.empty()) return s;
  for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  Common common;

  void emit(std::string_view data) {
    if (common.output.empty()) {
      out_ << data;
    } else {
      write_file(common.output, data);
    }
  }

  void log(const std::string& line) {
    if (common.verbose > 0) err_ << line << "\n";
  }

  std::mt19937_64 rng_for(std::string_view id) const {
    return std::mt19937_64(common.seed ^ fnv1a(id));
  }

  report::Format format() const { return report::format_from_string(common.format); }

  crawl::FetchPolicy policy() const {
    crawl::FetchPolicy p = common.policy;
    p.honor_robots = !common.no_robots;
    return p;
  }

  std::string stamp() const {
    return common.normalize_time ? std::string(report::kEpoch) : report::now_rfc3339();
  }

  int finish(report::ScanReport rep) {
    rep.created_at = stamp();
    if (common.normalize_time) rep = report::normalized(rep);
    emit(report::write_report(rep, {format(), common.redact}));
    return report::has_findings(rep) ? kExitFindings : kExitClean;
  }

  // Text of a local file or an http(s) resource.
  std::string load_text(const std::string& source, bool html_only, std::string* final_url = nullptr) {
    if (!is_url(source)) return read_file(source);
    crawl::Fetcher fetcher(policy());
    auto fetched = fetcher.fetch(source, html_only);
    if (!fetched.ok()) {
      throw Error(ErrorCode::Io, source + ": " + std::string(crawl::to_string(fetched.error)) +
                                     (fetched.detail.empty() ? "" : " (" + fetched.detail + ")"));
    }
    if (final_url) *final_url = fetched.final_url;
    return std::move(fetched.snapshot->html);
  }

  int scan_page(const std::vector<std::string>& inputs) {
    report::ScanReport rep;
    std::set<std::string> ids;
    for (const auto& input : inputs) {
      if (!ids.insert(input).second) throw Error(ErrorCode::DuplicateTarget, input);
      std::string url;
      std::string html = load_text(input, true, &url);
      auto rng = rng_for(input);
      auto scan = scan::scan_html(html, rng, url);
      report::TargetRecord t;
      t.id = input;
      t.kind = report::TargetKind::Page;
      if (!url.empty()) t.url = url;
      t.is_login = scan.verdict.is_login;
      t.has_password_field = scan.verdict.has_password_field;
      t.markers = scan.markers;
      t.findings = scan.findings;
      t.scanned_at = stamp();
      log(input + ": " + std::to_string(t.findings.size()) + " finding(s)");
      rep.targets.push_back(std::move(t));
    }
    return finish(std::move(rep));
  }

  int audit_pair(const std::string& before_path, const std::string& after_path,
                 const std::string& secret, const std::string& url) {
    audit::SnapshotPair pair;
    if (after_path.empty()) {
      pair = audit::load_snapshot_pair(before_path);
    } else {
      pair.before.html = read_file(before_path);
      pair.after.html = read_file(after_path);
      pair.after.phase = audit::SnapshotPhase::After;
      pair.before.url = pair.after.url = url.empty() ? before_path : url;
      pair.before.captured_at = pair.after.captured_at = report::now_rfc3339();
      fs::path meta = fs::path(after_path).parent_path() / "meta";
      if (!secret.empty()) {
        pair.after.probe_secret = secret;
      } else if (fs::exists(meta)) {
        std::string meta_text = read_file(meta.string());
        for (auto line : text::split(meta_text, '\n')) {
          line = text::trim(line);
          if (line.starts_with("probe_secret=")) {
            pair.after.probe_secret = std::string(line.substr(13));
          }
        }
      }
      if (!pair.after.probe_secret) {
        throw Error(ErrorCode::InvalidArgument, "audit-pair needs --secret or a meta file");
      }
    }
    auto findings = audit::audit_snapshot_pair(pair.before, pair.after);
    auto verdict = audit::detect_login_page(dom::parse_html(pair.before.html));
    report::TargetRecord t;
    t.id = url.empty() ? before_path : url;
    t.kind = report::TargetKind::Page;
    t.url = pair.before.url;
    t.is_login = verdict.is_login;
    t.has_password_field = verdict.has_password_field;
    t.findings = std::move(findings);
    t.scanned_at = stamp();
    report::ScanReport rep;
    rep.targets.push_back(std::move(t));
    return finish(std::move(rep));
  }

  int crawl(const std::string& domains_file, const std::string& journal,
            const std::string& snapshot_dir, int parallel) {
    crawl::CrawlOptions options;
    options.policy = policy();
    if (parallel > 0) options.policy.max_parallel_hosts = parallel;
    options.seed = common.seed;
    if (!journal.empty()) options.journal = journal;
    if (!snapshot_dir.empty()) options.snapshot_dir = snapshot_dir;
    options.normalize_timestamps = common.normalize_time;
    auto result = crawl::crawl_corpus(crawl::parse_domain_list(read_file(domains_file)), options);
    for (const auto& t : result.targets) {
      log(t.domain + "\t" + std::string(crawl::to_string(t.outcome)));
    }
    if (result.resumed > 0) log("resumed " + std::to_string(result.resumed) + " domain(s) from journal");
    return finish(std::move(result.report));
  }

  int attack_replay(const std::string& page, const std::string& directives_source) {
    std::string html = load_text(page, true);
    auto directives = attack::parse_directives(load_text(directives_source, false));
    auto rng = rng_for(page);
    std::string secret = audit::make_probe_secret(rng, html);
    auto shown = [&](const std::string& v) {
      return common.redact ? replace_all(v, secret, report::kRedacted) : v;
    };

    ordered_json results = ordered_json::array();
    bool any_success = false;
    std::vector<std::vector<std::string>> rows;
    for (const auto& directive : directives) {
      dom::Document doc = dom::parse_html(html);
      auto fields = audit::find_sensitive_fields(doc);
      audit::flag_sensitive_fields(doc, fields);
      for (const auto& f : fields) {
        if (auto* node = doc.find_by_id(f.node_id)) attack::simulate_typing(doc, *node, secret);
      }
      ordered_json r;
      r["selector"] = directive.selector;
      r["replacement_tag"] = directive.replacement_tag ? ordered_json(*directive.replacement_tag) : ordered_json();
      r["replacement_type"] =
          directive.replacement_type ? ordered_json(*directive.replacement_type) : ordered_json();
      try {
        auto res = attack::run_hybrid(doc, directive, secret);
        r["kind"] = attack::to_string(res.kind);
        ordered_json kinds = ordered_json::array();
        for (auto k : res.target_kinds) kinds.push_back(attack::to_string(k));
        r["target_kinds"] = kinds;
        ordered_json extracted = ordered_json::array();
        for (const auto& e : res.extracted) {
          extracted.push_back({{"locator", e.locator}, {"value", shown(e.value)}});
          rows.push_back({directive.selector, std::string(attack::to_string(res.kind)), e.locator,
                          shown(e.value), res.succeeded ? "true" : "false"});
        }
        r["extracted"] = extracted;
        r["succeeded"] = res.succeeded;
        r["mutated_document"] = res.mutated_document;
        r["error"] = nullptr;
        any_success = any_success || res.succeeded;
      } catch (const Error& e) {
        r["kind"] = nullptr;
        r["target_kinds"] = ordered_json::array();
        r["extracted"] = ordered_json::array();
        r["succeeded"] = false;
        r["mutated_document"] = false;
        r["error"] = e.what();
        rows.push_back({directive.selector, "", "", "", "false"});
      }
      results.push_back(std::move(r));
    }
    if (format() == report::Format::Csv) {
      std::string csv = "selector,kind,locator,value,succeeded\r\n";
      for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
          if (i) csv += ',';
          csv += report::csv_escape(row[i]);
        }
        csv += "\r\n";
      }
      emit(csv);
    } else {
      ordered_json doc;
      doc["page"] = page;
      doc["secret_used"] = shown(secret);
      doc["results"] = std::move(results);
      emit(doc.dump(2) + "\n");
    }
    return any_success ? kExitFindings : kExitClean;
  }

  int scan_extension(const std::vector<std::string>& paths, const std::string& log_path,
                     const std::string& secret) {
    if (!log_path.empty() && paths.size() != 1) {
      throw Error(ErrorCode::InvalidArgument, "--log applies to a single extension");
    }
    if (!log_path.empty() && secret.empty()) {
      throw Error(ErrorCode::InvalidArgument, "--log needs --secret");
    }
    report::ScanReport rep;
    std::set<std::string> ids;
    for (const auto& path : paths) {
      auto pkg = ext::load_extension(path);
      report::TargetRecord t;
      t.id = pkg.id;
      if (!ids.insert(t.id).second) t.id = path;
      t.kind = report::TargetKind::Extension;
      t.extension = ext::analyze_package(pkg);
      t.extension->id = t.id;
      if (!log_path.empty() && instrument::detect_capture(read_file(log_path), secret).captured) {
        t.markers.emplace_back(report::kMarkerCapturedDynamic);
      }
      t.scanned_at = stamp();
      rep.targets.push_back(std::move(t));
    }
    return finish(std::move(rep));
  }

  int instrument(const std::string& path) {
    if (common.output.empty()) throw Error(ErrorCode::InvalidArgument, "instrument needs -o");
    std::vector<instrument::InstrumentationEdit> edits;
    std::vector<instrument::SkippedDeclarator> skipped;
    bool single_script = fs::is_regular_file(path) && fs::path(path).extension() == ".js";
    std::string bytes;
    if (single_script) {
      auto result = instrument::instrument_source(read_file(path), fs::path(path).filename().string());
      bytes = std::move(result.text);
      edits = std::move(result.edits);
      skipped = std::move(result.skipped);
    } else {
      auto pkg = ext::load_extension(path);
      bytes = instrument::repack_instrumented(pkg, &edits);
      for (const auto& script : pkg.scripts) {
        if (!pkg.is_content_script(script.path)) continue;
        auto r = instrument::instrument_source(script.source, script.path);
        skipped.insert(skipped.end(), r.skipped.begin(), r.skipped.end());
      }
    }
    write_file(common.output, bytes);
    ordered_json j;
    ordered_json e = ordered_json::array();
    for (const auto& edit : edits) {
      e.push_back({{"file", edit.file}, {"line", edit.line}, {"variable", edit.variable},
                   {"inserted_line", edit.inserted_line}});
    }
    ordered_json s = ordered_json::array();
    for (const auto& sk : skipped) {
      s.push_back({{"file", sk.file}, {"line", sk.line}, {"variable", sk.variable}, {"reason", sk.reason}});
    }
    j["output"] = common.output;
    j["edits"] = e;
    j["skipped"] = s;
    out_ << j.dump(2) << "\n";
    return kExitClean;
  }

  int detect_capture(const std::string& log_path, const std::string& secret) {
    auto verdict = instrument::detect_capture(read_file(log_path), secret);
    ordered_json lines = ordered_json::array();
    for (const auto& m : verdict.matching_lines) {
      std::string value = common.redact ? replace_all(m.value, secret, report::kRedacted) : m.value;
      lines.push_back({{"line_no", m.line_no}, {"variable", m.variable}, {"value", value}});
    }
    ordered_json j;
    j["captured"] = verdict.captured;
    j["matching_lines"] = lines;
    emit(j.dump(2) + "\n");
    return verdict.captured ? kExitFindings : kExitClean;
  }

  int report_merge(const std::vector<std::string>& files, bool stats) {
    std::vector<report::ScanReport> reports;
    for (const auto& f : files) reports.push_back(report::read_report(read_file(f)));
    auto merged = report::merge_reports(reports);
    if (stats) {
      emit(report::write_stats(report::aggregate({merged}), format()));
      return report::has_findings(merged) ? kExitFindings : kExitClean;
    }
    if (common.normalize_time) merged = report::normalized(merged);
    emit(report::write_report(merged, {format(), common.redact}));
    return report::has_findings(merged) ? kExitFindings : kExitClean;
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Runner runner(out, err);
  Common& c = runner.common;

  CLI::App app{"Audits web input fields and browser extensions for password exposure.",
               "field-sentry"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags win");
  app.add_option("-o,--output", c.output, "Write output here instead of stdout");
  app.add_option("--format", c.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--redact,!--no-redact", c.redact, "Redact probe secrets in output (default on)");
  auto* seed = app.add_option("--seed", c.seed, "Probe-secret RNG seed");
  app.add_flag("--normalize-time", c.normalize_time, "Stamp every timestamp with the epoch");
  app.add_flag("-v,--verbose", c.verbose, "Progress on stderr");
  app.add_option("--timeout", c.policy.timeout_seconds, "Fetch timeout, seconds")->check(CLI::PositiveNumber);
  app.add_option("--max-redirects", c.policy.max_redirects)->check(CLI::NonNegativeNumber);
  app.add_option("--max-bytes", c.policy.max_body_bytes, "Body cap")->check(CLI::PositiveNumber);
  app.add_option("--delay", c.policy.per_host_delay_seconds, "Per-host delay, seconds")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--user-agent", c.policy.user_agent)->envname("FIELD_SENTRY_UA");
  app.add_option("--scheme", c.policy.default_scheme, "Scheme for bare domains")
      ->check(CLI::IsMember({"http", "https"}));
  app.add_flag("--no-robots", c.no_robots, "Ignore robots.txt");

  auto sub = [&](const char* name, const char* about) {
    auto* s = app.add_subcommand(name, about);
    s->fallthrough();
    return s;
  };

  std::vector<std::string> inputs;
  std::string first, second, secret, url, journal, snapshot_dir, directives, log_path;
  int parallel = 0;
  bool stats = false;

  auto* scan_page = sub("scan-page", "Type probes into a page's sensitive fields and classify them");
  scan_page->add_option("inputs", inputs, "HTML files or http(s) URLs")->required();

  auto* audit_pair = sub("audit-pair", "Compare before/after snapshots of a page");
  audit_pair->add_option("before", first, "before.html, or a snapshot directory/archive")->required();
  audit_pair->add_option("after", second, "after.html");
  audit_pair->add_option("--secret", secret, "Probe secret typed between the snapshots");
  audit_pair->add_option("--url", url, "Page URL");

  auto* crawl_cmd = sub("crawl", "Discover and audit login pages for a domain list");
  crawl_cmd->add_option("domains", first, "One domain or rank,domain per line")
      ->required()->check(CLI::ExistingFile);
  crawl_cmd->add_option("--parallel", parallel, "Hosts crawled at once")->check(CLI::PositiveNumber);
  crawl_cmd->add_option("--journal", journal, "Progress journal; rerun to resume");
  crawl_cmd->add_option("--snapshot-dir", snapshot_dir, "Archive snapshot pairs here");

  auto* replay = sub("attack-replay", "Replay the extraction attacks driven by selector directives");
  replay->add_option("page", first, "HTML file or URL")->required();
  replay->add_option("--directives", directives, "JSON-lines file or URL")->required();

  auto* scan_ext = sub("scan-extension", "Permission class and static scans of an extension");
  scan_ext->add_option("paths", inputs, "Directory, .zip or .crx")->required();
  scan_ext->add_option("--log", log_path, "Console log from an instrumented run");
  scan_ext->add_option("--secret", secret, "Probe secret typed during that run");

  auto* instr = sub("instrument", "Insert capture logging into content scripts");
  instr->add_option("path", first, "Script or extension")->required();

  auto* detect = sub("detect-capture", "Check an instrumented run's log for the probe secret");
  detect->add_option("log", first, "Log file")->required()->check(CLI::ExistingFile);
  detect->add_option("--secret", secret, "Probe secret")->required();

  auto* report_cmd = sub("report", "Report utilities");
  report_cmd->require_subcommand(1);
  auto* merge = report_cmd->add_subcommand("merge", "Merge reports; target ids must be unique");
  merge->fallthrough();
  merge->add_option("files", inputs, "Report JSON files")->required();
  merge->add_flag("--stats", stats, "Emit corpus statistics instead");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitClean;
    }
    app.exit(e, out, err);
    return kExitError;
  }

  c.seed_given = seed->count() > 0;
  if (!c.seed_given) c.seed = std::random_device{}() ^ (std::uint64_t{std::random_device{}()} << 32);

  try {
    if (*scan_page) return runner.scan_page(inputs);
    if (*audit_pair) return runner.audit_pair(first, second, secret, url);
    if (*crawl_cmd) return runner.crawl(first, journal, snapshot_dir, parallel);
    if (*replay) return runner.attack_replay(first, directives);
    if (*scan_ext) return runner.scan_extension(inputs, log_path, secret);
    if (*instr) return runner.instrument(first);
    if (*detect) return runner.detect_capture(first, secret);
    if (*merge) return runner.report_merge(inputs, stats);
  } catch (const std::exception& e) {
    err << "field-sentry: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace field_sentry::cli
