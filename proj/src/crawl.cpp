#include "field_sentry/crawl.hpp"

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cctype>
#include <fstream>
#include <sstream>
#include <thread>

#include "field_sentry/error.hpp"
#include "field_sentry/page_scan.hpp"
#include "field_sentry/text.hpp"

namespace field_sentry::crawl {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int default_port(std::string_view scheme) { return scheme == "https" ? 443 : 80; }

// Collapses "." and ".." segments of an absolute path.
std::string remove_dot_segments(std::string_view path) {
  std::vector<std::string_view> out;
  bool trailing_slash = path.ends_with("/") || path.ends_with("/.") || path.ends_with("/..");
  for (auto seg : text::split(path, '/')) {
    if (seg.empty() || seg == ".") continue;
    if (seg == "..") {
      if (!out.empty()) out.pop_back();
      continue;
    }
    out.push_back(seg);
  }
  std::string result;
  for (auto seg : out) {
    result += '/';
    result += seg;
  }
  if (result.empty() || trailing_slash) result += '/';
  return result;
}

std::string strip_fragment(std::string_view s) {
  auto hash = s.find('#');
  return std::string(hash == std::string_view::npos ? s : s.substr(0, hash));
}

std::string normalize_words(std::string_view s) {
  std::string out;
  bool space = true;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      out.push_back(static_cast<char>(std::tolower(c)));
      space = false;
    } else if (!space) {
      out.push_back(' ');
      space = true;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

bool robots_pattern_match(std::string_view pattern, std::string_view path) {
  bool anchored = pattern.ends_with("$");
  if (anchored) pattern.remove_suffix(1);
  // Greedy glob with backtracking on '*'.
  std::size_t p = 0, s = 0, star = std::string_view::npos, mark = 0;
  while (s < path.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = s;
    } else if (p < pattern.size() && pattern[p] == path[s]) {
      ++p;
      ++s;
    } else if (p == pattern.size() && !anchored) {
      return true;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      s = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

std::string sanitize_name(std::string_view s) {
  std::string out;
  for (unsigned char c : s) {
    out.push_back((std::isalnum(c) || c == '.' || c == '-') ? static_cast<char>(c) : '_');
  }
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out << data;
  }
  fs::rename(tmp, path);
}

bool is_html_type(std::string_view content_type) {
  return text::icontains(content_type, "text/html") ||
         text::icontains(content_type, "application/xhtml+xml");
}

}  // namespace

// ---------------------------------------------------------------------------
// URLs

std::string Url::origin() const {
  std::string out = scheme + "://" + host;
  if (port != default_port(scheme)) out += ":" + std::to_string(port);
  return out;
}

std::string Url::str() const { return origin() + target; }

std::string Url::host_key() const { return host + ":" + std::to_string(port); }

std::optional<Url> parse_url(std::string_view text) {
  text = text::trim(text);
  auto sep = text.find("://");
  if (sep == std::string_view::npos) return std::nullopt;
  Url url;
  url.scheme = text::to_lower(text.substr(0, sep));
  if (url.scheme != "http" && url.scheme != "https") return std::nullopt;
  std::string_view rest = text.substr(sep + 3);
  auto path_start = rest.find_first_of("/?#");
  std::string_view authority = rest.substr(0, path_start);
  if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
  if (authority.empty()) return std::nullopt;
  auto colon = authority.rfind(':');
  if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
    std::string_view port_text = authority.substr(colon + 1);
    int port = 0;
    for (char c : port_text) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
      port = port * 10 + (c - '0');
      if (port > 65535) return std::nullopt;
    }
    url.port = port_text.empty() ? default_port(url.scheme) : port;
    authority = authority.substr(0, colon);
  } else {
    url.port = default_port(url.scheme);
  }
  url.host = text::to_lower(authority);
  if (url.host.empty()) return std::nullopt;
  std::string target =
      path_start == std::string_view::npos ? std::string("/") : strip_fragment(rest.substr(path_start));
  if (target.empty() || target.front() != '/') target.insert(target.begin(), '/');
  auto q = target.find('?');
  url.target = remove_dot_segments(target.substr(0, q)) + (q == std::string::npos ? "" : target.substr(q));
  return url;
}

std::optional<Url> resolve(const Url& base, std::string_view reference) {
  std::string ref = strip_fragment(text::trim(reference));
  if (ref.empty()) return base;
  auto colon = ref.find(':');
  auto first_special = ref.find_first_of("/?");
  if (colon != std::string::npos && (first_special == std::string::npos || colon < first_special)) {
    return parse_url(ref);  // has a scheme; non-http(s) yields nullopt
  }
  if (ref.starts_with("//")) return parse_url(base.scheme + ":" + ref);
  Url out = base;
  if (ref.front() == '/') {
    out.target = ref;
  } else if (ref.front() == '?') {
    auto q = base.target.find('?');
    out.target = base.target.substr(0, q) + ref;
  } else {
    std::string base_path = base.target.substr(0, base.target.find('?'));
    out.target = base_path.substr(0, base_path.rfind('/') + 1) + ref;
  }
  auto q = out.target.find('?');
  out.target = remove_dot_segments(out.target.substr(0, q)) +
               (q == std::string::npos ? "" : out.target.substr(q));
  return out;
}

bool same_site(const Url& candidate, std::string_view domain_host) {
  std::string base = text::to_lower(domain_host);
  if (auto colon = base.find(':'); colon != std::string::npos) base.resize(colon);
  if (base.starts_with("www.")) base.erase(0, 4);
  std::string host = candidate.host;
  if (host.starts_with("www.")) host.erase(0, 4);
  return host == base || host.ends_with("." + base);
}

std::string_view to_string(FetchError error) {
  switch (error) {
    case FetchError::None: return "None";
    case FetchError::Timeout: return "Timeout";
    case FetchError::TooManyRedirects: return "TooManyRedirects";
    case FetchError::NonHtmlContent: return "NonHtmlContent";
    case FetchError::NetworkError: return "NetworkError";
    case FetchError::HttpStatus: return "HttpStatus";
    case FetchError::DisallowedByRobots: return "DisallowedByRobots";
    case FetchError::InvalidUrl: return "InvalidUrl";
  }
  return "NetworkError";
}

// ---------------------------------------------------------------------------
// Politeness

HostGate::Ticket HostGate::acquire(const std::string& host) {
  std::unique_lock lock(mutex_);
  for (;;) {
    HostState& state = hosts_[host];
    if (state.busy) {
      cv_.wait(lock);
      continue;
    }
    if (state.last_finished) {
      auto ready = *state.last_finished + delay_;
      auto now = Clock::now();
      if (now < ready) {
        cv_.wait_until(lock, ready);
        continue;
      }
    }
    state.busy = true;
    return Ticket(this, host);
  }
}

void HostGate::release(const std::string& host) {
  {
    std::lock_guard lock(mutex_);
    HostState& state = hosts_[host];
    state.busy = false;
    state.last_finished = Clock::now();
  }
  cv_.notify_all();
}

bool RobotsRules::allowed(std::string_view target) const {
  std::size_t best = 0;
  bool verdict = true;
  bool matched = false;
  for (const auto& [pattern, allow] : rules) {
    if (!robots_pattern_match(pattern, target)) continue;
    if (!matched || pattern.size() > best || (pattern.size() == best && allow)) {
      best = pattern.size();
      verdict = allow;
      matched = true;
    }
  }
  return verdict;
}

RobotsRules parse_robots(std::string_view text, std::string_view user_agent) {
  std::string token = text::to_lower(user_agent.substr(0, user_agent.find('/')));
  struct Group {
    std::vector<std::string> agents;
    std::vector<std::pair<std::string, bool>> rules;
  };
  std::vector<Group> groups;
  bool last_was_agent = false;
  for (auto raw : text::split(text, '\n')) {
    auto line = raw.substr(0, raw.find('#'));
    auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    std::string key = text::to_lower(text::trim(line.substr(0, colon)));
    std::string value(text::trim(line.substr(colon + 1)));
    if (key == "user-agent") {
      if (!last_was_agent || groups.empty()) groups.emplace_back();
      groups.back().agents.push_back(text::to_lower(value));
      last_was_agent = true;
      continue;
    }
    last_was_agent = false;
    if (groups.empty()) continue;
    if (key == "disallow" && !value.empty()) groups.back().rules.emplace_back(value, false);
    if (key == "allow" && !value.empty()) groups.back().rules.emplace_back(value, true);
  }
  RobotsRules specific, wildcard;
  bool have_specific = false;
  for (const auto& g : groups) {
    for (const auto& agent : g.agents) {
      if (agent == "*") {
        wildcard.rules.insert(wildcard.rules.end(), g.rules.begin(), g.rules.end());
      } else if (!token.empty() && (token.find(agent) != std::string::npos ||
                                    agent.find(token) != std::string::npos)) {
        specific.rules.insert(specific.rules.end(), g.rules.begin(), g.rules.end());
        have_specific = true;
      }
    }
  }
  return have_specific ? specific : wildcard;
}

// ---------------------------------------------------------------------------
// Fetching

Fetcher::Fetcher(FetchPolicy policy)
    : policy_(std::move(policy)),
      gate_(std::chrono::milliseconds(static_cast<long>(policy_.per_host_delay_seconds * 1000))) {}

Fetcher::Raw Fetcher::get(const Url& url, bool html_only) {
  Raw raw;
  auto ticket = gate_.acquire(url.host_key());
  httplib::Client client(url.origin());
  auto timeout_us = static_cast<long>(policy_.timeout_seconds * 1e6);
  client.set_connection_timeout(timeout_us / 1000000, timeout_us % 1000000);
  client.set_read_timeout(timeout_us / 1000000, timeout_us % 1000000);
  client.set_write_timeout(timeout_us / 1000000, timeout_us % 1000000);
  client.set_follow_location(false);
  client.set_keep_alive(false);
  httplib::Headers headers = {{"User-Agent", policy_.user_agent}, {"Accept", "text/html,*/*;q=0.5"}};

  const auto deadline = Clock::now() + std::chrono::microseconds(timeout_us);
  bool timed_out = false;
  bool stopped_on_headers = false;
  auto result = client.Get(
      url.target, headers,
      [&](const httplib::Response& response) {
        raw.status = response.status;
        raw.location = response.get_header_value("Location");
        raw.content_type = response.get_header_value("Content-Type");
        bool redirect = response.status >= 300 && response.status < 400 && !raw.location.empty();
        bool bad_status = response.status < 200 || response.status >= 300;
        bool not_html = html_only && !raw.content_type.empty() && !is_html_type(raw.content_type);
        if (redirect || bad_status || not_html) {
          stopped_on_headers = true;
          return false;
        }
        return true;
      },
      [&](const char* data, std::size_t length) {
        if (Clock::now() > deadline) {
          timed_out = true;
          return false;
        }
        std::size_t room = policy_.max_body_bytes - raw.body.size();
        if (length > room) {
          raw.body.append(data, room);
          raw.truncated = true;
          return false;
        }
        raw.body.append(data, length);
        return true;
      });

  if (!result) {
    auto err = result.error();
    if (err == httplib::Error::Canceled && (stopped_on_headers || raw.truncated)) {
      // deliberate stop; fall through to status handling
    } else if (timed_out || err == httplib::Error::ConnectionTimeout ||
               (err == httplib::Error::Read && Clock::now() >= deadline)) {
      raw.error = FetchError::Timeout;
      raw.detail = "timed out after " + std::to_string(policy_.timeout_seconds) + "s";
      return raw;
    } else if (err == httplib::Error::Read && raw.status != 0 && Clock::now() >= deadline) {
      raw.error = FetchError::Timeout;
      return raw;
    } else {
      raw.error = FetchError::NetworkError;
      raw.detail = httplib::to_string(err);
      if (err == httplib::Error::Read || err == httplib::Error::Connection) {
        // httplib reports read timeouts as Read; tell them apart by the clock.
        if (Clock::now() + std::chrono::milliseconds(50) >= deadline) raw.error = FetchError::Timeout;
      }
      return raw;
    }
  }
  return raw;
}

bool Fetcher::robots_allow(const Url& url) {
  std::shared_ptr<RobotsRules> rules;
  {
    std::lock_guard lock(robots_mutex_);
    auto it = robots_.find(url.host_key());
    if (it != robots_.end()) rules = it->second;
  }
  if (!rules) {
    Url robots_url = url;
    robots_url.target = "/robots.txt";
    Raw raw = get(robots_url, false);
    rules = std::make_shared<RobotsRules>();
    if (raw.error == FetchError::None && raw.status == 200) {
      *rules = parse_robots(raw.body, policy_.user_agent);
    }
    std::lock_guard lock(robots_mutex_);
    robots_.emplace(url.host_key(), rules);
  }
  return rules->allowed(url.target);
}

FetchResult Fetcher::fetch_page(const std::string& url) { return fetch(url, true); }

FetchResult Fetcher::fetch(const std::string& url_text, bool html_only) {
  FetchResult result;
  auto url = parse_url(url_text);
  if (!url) {
    result.error = FetchError::InvalidUrl;
    result.detail = url_text;
    return result;
  }
  for (int hop = 0;; ++hop) {
    result.final_url = url->str();
    if (policy_.honor_robots && !robots_allow(*url)) {
      result.error = FetchError::DisallowedByRobots;
      result.detail = url->str();
      return result;
    }
    Raw raw = get(*url, html_only);
    result.status = raw.status;
    if (raw.error != FetchError::None) {
      result.error = raw.error;
      result.detail = raw.detail;
      return result;
    }
    if (raw.status >= 300 && raw.status < 400 && !raw.location.empty()) {
      if (hop >= policy_.max_redirects) {
        result.error = FetchError::TooManyRedirects;
        result.detail = "more than " + std::to_string(policy_.max_redirects) + " redirects";
        return result;
      }
      auto next = resolve(*url, raw.location);
      if (!next) {
        result.error = FetchError::InvalidUrl;
        result.detail = raw.location;
        return result;
      }
      url = next;
      continue;
    }
    if (raw.status < 200 || raw.status >= 300) {
      result.error = FetchError::HttpStatus;
      result.detail = "HTTP " + std::to_string(raw.status);
      return result;
    }
    bool html = raw.content_type.empty() ? text::trim(raw.body).starts_with("<")
                                         : is_html_type(raw.content_type);
    if (html_only && !html) {
      result.error = FetchError::NonHtmlContent;
      result.detail = raw.content_type;
      return result;
    }
    result.truncated = raw.truncated;
    audit::HtmlSnapshot snap;
    snap.url = url->str();
    snap.captured_at = report::now_rfc3339();
    snap.html = std::move(raw.body);
    snap.phase = audit::SnapshotPhase::Before;
    result.snapshot = std::move(snap);
    return result;
  }
}

// ---------------------------------------------------------------------------
// Discovery

bool matches_login_keyword(std::string_view visible_text) {
  std::string padded = " " + normalize_words(visible_text) + " ";
  for (auto kw : kLoginKeywords) {
    if (padded.find(" " + std::string(kw) + " ") != std::string::npos) return true;
  }
  return false;
}

std::vector<std::string> discover_login_candidates(const dom::Document& homepage, const Url& base,
                                                   std::string_view domain,
                                                   SearchProvider* search) {
  std::vector<std::string> out;
  auto add = [&](const std::string& url) {
    if (out.size() >= kMaxCandidates) return;
    if (std::find(out.begin(), out.end(), url) == out.end()) out.push_back(url);
  };
  auto add_href = [&](std::string_view href) {
    auto resolved = resolve(base, href);
    if (resolved && same_site(*resolved, domain)) add(resolved->str());
  };

  dom::for_each_element(homepage.root(), [&](const dom::Node& el) {
    bool anchor = el.is("a");
    bool button = el.is("button");
    if (!anchor && !button) return;
    std::string label = el.text_content();
    if (auto aria = el.attribute("aria-label")) { label += " "; label += *aria; }
    if (!matches_login_keyword(label)) return;
    if (anchor) {
      if (auto href = el.attribute("href")) add_href(*href);
      return;
    }
    for (const dom::Node* p = el.parent(); p; p = p->parent()) {
      if (p->is("a")) return;  // the anchor itself is visited on its own
    }
    if (auto action = el.attribute("formaction")) add_href(*action);
  });

  if (!out.empty()) return out;
  for (auto path : kWellKnownLoginPaths) add(resolve(base, path)->str());
  if (search) {
    std::string query = std::string(domain) + " login";
    for (const auto& url : search->search(query, kMaxCandidates)) {
      if (auto u = parse_url(url)) add(u->str());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Probing

namespace {

ProbeResult probe_snapshot(const audit::HtmlSnapshot& before, std::mt19937_64& rng) {
  ProbeResult probe;
  probe.record.kind = report::TargetKind::Page;
  probe.record.url = before.url;
  dom::Document doc = dom::parse_html(before.html);
  doc.source_url = before.url;
  auto scan = scan::scan_document(doc, rng);
  probe.record.is_login = scan.verdict.is_login;
  probe.record.has_password_field = scan.verdict.has_password_field;
  probe.record.markers = scan.markers;
  probe.record.findings = scan.findings;
  if (!scan.findings.empty()) {
    audit::HtmlSnapshot after;
    after.url = before.url;
    after.captured_at = report::now_rfc3339();
    after.html = dom::outer_html(doc.root());
    after.phase = audit::SnapshotPhase::After;
    after.probe_secret = scan.findings.front().secret_used;
    probe.snapshots = audit::SnapshotPair{before, std::move(after)};
  }
  return probe;
}

void mark_fetch_failure(report::TargetRecord& record, const FetchResult& fetch) {
  record.markers.push_back("FetchFailed:" + std::string(to_string(fetch.error)));
}

}  // namespace

ProbeResult probe_login_page(Fetcher& fetcher, const std::string& url, std::mt19937_64& rng) {
  FetchResult fetch = fetcher.fetch_page(url);
  if (!fetch.ok()) {
    ProbeResult probe;
    probe.record.url = url;
    probe.record.outcome = std::string(to_string(Outcome::FetchFailed));
    mark_fetch_failure(probe.record, fetch);
    probe.fetch = std::move(fetch);
    return probe;
  }
  ProbeResult probe = probe_snapshot(*fetch.snapshot, rng);
  if (fetch.truncated) probe.record.markers.emplace_back("Truncated");
  probe.fetch = std::move(fetch);
  return probe;
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::LoginFound: return "LoginFound";
    case Outcome::NoLoginFound: return "NoLoginFound";
    case Outcome::FetchFailed: return "FetchFailed";
  }
  return "FetchFailed";
}

std::optional<Outcome> outcome_from_string(std::string_view s) {
  if (s == "LoginFound") return Outcome::LoginFound;
  if (s == "NoLoginFound") return Outcome::NoLoginFound;
  if (s == "FetchFailed") return Outcome::FetchFailed;
  return std::nullopt;
}

std::vector<CrawlTarget> parse_domain_list(std::string_view list) {
  std::vector<CrawlTarget> out;
  for (auto raw : text::split(list, '\n')) {
    auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    CrawlTarget t;
    auto comma = line.find(',');
    if (comma != std::string_view::npos) {
      auto rank_text = text::trim(line.substr(0, comma));
      int rank = 0;
      bool numeric = !rank_text.empty();
      for (char c : rank_text) {
        if (!std::isdigit(static_cast<unsigned char>(c))) numeric = false;
        else rank = rank * 10 + (c - '0');
      }
      if (numeric) t.rank = rank;
      line = text::trim(line.substr(comma + 1));
    }
    t.domain = std::string(line);
    if (!t.domain.empty()) out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus

namespace {

struct DomainOutcome {
  CrawlTarget target;
  report::TargetRecord record;
};

DomainOutcome crawl_domain(Fetcher& fetcher, const CrawlTarget& input, const CrawlOptions& options) {
  DomainOutcome result{input, {}};
  CrawlTarget& target = result.target;
  report::TargetRecord& record = result.record;
  record.id = input.domain;
  record.kind = report::TargetKind::Page;

  std::mt19937_64 rng(options.seed ^ fnv1a(input.domain));
  std::string home = input.domain.find("://") != std::string::npos
                         ? input.domain
                         : options.policy.default_scheme + "://" + input.domain + "/";
  auto home_url = parse_url(home);
  FetchResult fetched = fetcher.fetch_page(home);
  if (!home_url || !fetched.ok()) {
    target.outcome = Outcome::FetchFailed;
    record.outcome = std::string(to_string(Outcome::FetchFailed));
    mark_fetch_failure(record, fetched);
    record.url = home;
    return result;
  }

  std::optional<ProbeResult> login;
  dom::Document homepage = dom::parse_html(fetched.snapshot->html);
  auto final_url = parse_url(fetched.final_url).value_or(*home_url);
  if (audit::detect_login_page(homepage).has_password_field) {
    target.candidates = {final_url.str()};
    login = probe_snapshot(*fetched.snapshot, rng);
  } else {
    target.candidates = discover_login_candidates(homepage, final_url, home_url->host, options.search);
    for (const auto& candidate : target.candidates) {
      ProbeResult probe = probe_login_page(fetcher, candidate, rng);
      if (probe.fetch.ok() && probe.record.is_login) {
        login = std::move(probe);
        break;
      }
    }
  }

  if (!login) {
    target.outcome = Outcome::NoLoginFound;
    record.outcome = std::string(to_string(Outcome::NoLoginFound));
    record.url = final_url.str();
    return result;
  }
  target.outcome = Outcome::LoginFound;
  std::string id = record.id;
  record = std::move(login->record);
  record.id = std::move(id);
  record.outcome = std::string(to_string(Outcome::LoginFound));
  if (options.snapshot_dir && login->snapshots) {
    audit::save_snapshot_pair(*options.snapshot_dir / sanitize_name(input.domain), *login->snapshots);
  }
  return result;
}

class Journal {
 public:
  explicit Journal(fs::path path) : path_(std::move(path)), dir_(path_) {
    dir_ += ".d";
    fs::create_directories(dir_);
    if (fs::exists(path_)) {
      std::istringstream in(read_file(path_));
      std::string line;
      while (std::getline(in, line)) {
        auto tab = line.find('\t');
        if (tab == std::string::npos) continue;  // torn write
        done_.insert(line.substr(0, tab));
      }
    }
  }

  std::optional<DomainOutcome> replay(const CrawlTarget& input) const {
    if (!done_.count(input.domain)) return std::nullopt;
    fs::path side = sidecar(input.domain);
    if (!fs::exists(side)) return std::nullopt;
    try {
      auto j = nlohmann::json::parse(read_file(side));
      DomainOutcome out{input, report::read_target(j.at("record").dump())};
      auto outcome = outcome_from_string(j.at("outcome").get<std::string>());
      if (!outcome) return std::nullopt;
      out.target.outcome = *outcome;
      out.target.candidates = j.at("candidates").get<std::vector<std::string>>();
      return out;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void record(const DomainOutcome& outcome) {
    nlohmann::ordered_json j;
    j["outcome"] = to_string(outcome.target.outcome);
    j["candidates"] = outcome.target.candidates;
    j["record"] = nlohmann::ordered_json::parse(report::write_target(outcome.record));
    write_file_atomic(sidecar(outcome.target.domain), j.dump());
    std::string line = outcome.target.domain + "\t" + std::string(to_string(outcome.target.outcome)) + "\n";
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
  }

 private:
  fs::path sidecar(const std::string& domain) const {
    return dir_ / (sanitize_name(domain) + "-" + std::to_string(fnv1a(domain) % 100000) + ".json");
  }

  fs::path path_;
  fs::path dir_;
  std::set<std::string> done_;
  std::mutex mutex_;
};

}  // namespace

CrawlResult crawl_corpus(std::vector<CrawlTarget> domains, const CrawlOptions& options) {
  CrawlResult result;
  result.report.created_at = options.normalize_timestamps ? std::string(report::kEpoch)
                                                          : report::now_rfc3339();
  std::set<std::string> seen;
  for (const auto& d : domains) {
    if (!seen.insert(d.domain).second) throw Error(ErrorCode::DuplicateTarget, d.domain);
  }

  std::unique_ptr<Journal> journal;
  if (options.journal) journal = std::make_unique<Journal>(*options.journal);

  std::vector<std::optional<DomainOutcome>> slots(domains.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < domains.size(); ++i) {
    if (journal) slots[i] = journal->replay(domains[i]);
    if (slots[i]) {
      ++result.resumed;
    } else {
      pending.push_back(i);
    }
  }

  Fetcher fetcher(options.policy);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> completed{0};
  auto worker = [&] {
    for (;;) {
      if (options.stop_after && completed.load() >= *options.stop_after) return;
      std::size_t k = next.fetch_add(1);
      if (k >= pending.size()) return;
      std::size_t i = pending[k];
      DomainOutcome outcome;
      try {
        outcome = crawl_domain(fetcher, domains[i], options);
      } catch (const std::exception& e) {
        outcome.target = domains[i];
        outcome.target.outcome = Outcome::FetchFailed;
        outcome.record.id = domains[i].domain;
        outcome.record.outcome = std::string(to_string(Outcome::FetchFailed));
        outcome.record.markers.push_back(std::string("Error:") + e.what());
      }
      outcome.record.scanned_at = options.normalize_timestamps ? std::string(report::kEpoch)
                                                               : report::now_rfc3339();
      if (journal) journal->record(outcome);
      slots[i] = std::move(outcome);
      ++completed;
    }
  };
  int threads = std::max(1, std::min<int>(options.policy.max_parallel_hosts,
                                          static_cast<int>(pending.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (auto& slot : slots) {
    if (!slot) continue;  // interrupted before this domain ran
    result.targets.push_back(slot->target);
    result.report.targets.push_back(slot->record);
  }
  return result;
}

}  // namespace field_sentry::crawl
