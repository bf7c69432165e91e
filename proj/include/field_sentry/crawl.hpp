#pragma once

#include <array>
#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "field_sentry/dom.hpp"
#include "field_sentry/page_audit.hpp"
#include "field_sentry/report.hpp"

// Login-page discovery and probing over live sites.
namespace field_sentry::crawl {

struct Url {
  std::string scheme;  // "http" or "https"
  std::string host;    // lowercased
  int port = 0;        // explicit or scheme default
  std::string target;  // path + query, starts with '/'

  std::string origin() const;  // scheme://host[:port]
  std::string str() const;
  // host:port, the unit of politeness.
  std::string host_key() const;
};

std::optional<Url> parse_url(std::string_view text);
// RFC 3986 reference resolution for the forms found in hrefs. Fragments are
// dropped. Returns nullopt for non-http(s) references.
std::optional<Url> resolve(const Url& base, std::string_view reference);

/// Loose registrable-domain test: equal hosts after dropping a leading
/// "www.", or `candidate` a subdomain of that base host.
bool same_site(const Url& candidate, std::string_view domain_host);

struct FetchPolicy {
  double timeout_seconds = 10.0;
  int max_redirects = 5;
  std::size_t max_body_bytes = 1 << 20;
  double per_host_delay_seconds = 1.0;
  int max_parallel_hosts = 4;
  std::string user_agent = "field-sentry/0.1";
  bool honor_robots = true;
  std::string default_scheme = "https";
};

enum class FetchError {
  None,
  Timeout,
  TooManyRedirects,
  NonHtmlContent,
  NetworkError,
  HttpStatus,
  DisallowedByRobots,
  InvalidUrl,
};

std::string_view to_string(FetchError error);

struct FetchResult {
  FetchError error = FetchError::None;
  std::string detail;
  int status = 0;
  std::string final_url;
  bool truncated = false;
  std::optional<audit::HtmlSnapshot> snapshot;  // phase Before

  bool ok() const { return error == FetchError::None; }
};

/// Serializes requests per host and spaces them by the policy delay,
/// measured from the end of one request to the start of the next.
class HostGate {
 public:
  explicit HostGate(std::chrono::milliseconds delay) : delay_(delay) {}

  class Ticket {
   public:
    Ticket(HostGate* gate, std::string host) : gate_(gate), host_(std::move(host)) {}
    Ticket(Ticket&& other) noexcept : gate_(other.gate_), host_(std::move(other.host_)) {
      other.gate_ = nullptr;
    }
    Ticket(const Ticket&) = delete;
    Ticket& operator=(const Ticket&) = delete;
    Ticket& operator=(Ticket&&) = delete;
    ~Ticket() {
      if (gate_) gate_->release(host_);
    }

   private:
    HostGate* gate_;
    std::string host_;
  };

  Ticket acquire(const std::string& host);

 private:
  struct HostState {
    bool busy = false;
    std::optional<std::chrono::steady_clock::time_point> last_finished;
  };

  void release(const std::string& host);

  std::chrono::milliseconds delay_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::map<std::string, HostState> hosts_;
};

struct RobotsRules {
  // (prefix, allow) pairs for the group that applies to us.
  std::vector<std::pair<std::string, bool>> rules;

  bool allowed(std::string_view target) const;
};

RobotsRules parse_robots(std::string_view text, std::string_view user_agent);

class Fetcher {
 public:
  explicit Fetcher(FetchPolicy policy);

  FetchResult fetch_page(const std::string& url);
  // Any content type; the body lands in snapshot->html.
  FetchResult fetch(const std::string& url, bool html_only);

  const FetchPolicy& policy() const { return policy_; }

 private:
  struct Raw {
    FetchError error = FetchError::None;
    std::string detail;
    int status = 0;
    std::string location;
    std::string content_type;
    std::string body;
    bool truncated = false;
  };

  Raw get(const Url& url, bool html_only);
  bool robots_allow(const Url& url);

  FetchPolicy policy_;
  HostGate gate_;
  std::mutex robots_mutex_;
  std::map<std::string, std::shared_ptr<RobotsRules>> robots_;
};

inline constexpr std::array<std::string_view, 6> kLoginKeywords = {
    "log in", "login", "sign in", "signin", "my account", "account login",
};
inline constexpr std::array<std::string_view, 5> kWellKnownLoginPaths = {
    "/login", "/signin", "/sign-in", "/account/login", "/users/sign_in",
};
inline constexpr std::size_t kMaxCandidates = 5;

bool matches_login_keyword(std::string_view visible_text);

class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  // Reference query format: "<domain> login".
  virtual std::vector<std::string> search(const std::string& query, std::size_t limit) = 0;
};

std::vector<std::string> discover_login_candidates(const dom::Document& homepage,
                                                   const Url& base, std::string_view domain,
                                                   SearchProvider* search = nullptr);

struct ProbeResult {
  FetchResult fetch;
  report::TargetRecord record;
  std::optional<audit::SnapshotPair> snapshots;
};

// Fetch, detect, type probes, classify.
ProbeResult probe_login_page(Fetcher& fetcher, const std::string& url, std::mt19937_64& rng);

enum class Outcome { LoginFound, NoLoginFound, FetchFailed };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> outcome_from_string(std::string_view s);

struct CrawlTarget {
  std::string domain;
  std::optional<int> rank;
  std::vector<std::string> candidates;
  Outcome outcome = Outcome::NoLoginFound;
};

// Plain domains, or `rank,domain` lines. Blank lines and '#' comments skipped.
std::vector<CrawlTarget> parse_domain_list(std::string_view text);

struct CrawlOptions {
  FetchPolicy policy;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> journal;  // progress journal, enables resume
  std::optional<std::filesystem::path> snapshot_dir;
  SearchProvider* search = nullptr;
  bool normalize_timestamps = false;
  // Test hook: stop after this many domains complete (simulated interrupt).
  std::optional<std::size_t> stop_after;
};

struct CrawlResult {
  std::vector<CrawlTarget> targets;
  report::ScanReport report;
  std::size_t resumed = 0;  // domains replayed from the journal
};

CrawlResult crawl_corpus(std::vector<CrawlTarget> domains, const CrawlOptions& options);

}  // namespace field_sentry::crawl
