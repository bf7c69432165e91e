#pragma once

#include <json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "field_sentry/dom.hpp"
#include "field_sentry/text.hpp"

namespace fixtures {

namespace fs = std::filesystem;

inline fs::path dir(const std::string& sub = "") { return fs::path(FS_FIXTURES) / sub; }
inline fs::path golden(const std::string& sub = "") { return fs::path(FS_GOLDEN) / sub; }

inline std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read(p)); }

inline void write(const fs::path& p, const std::string& data) {
  std::ofstream out(p, std::ios::binary);
  out << data;
}

// Same shape as oracles/html5lib_dump.py.
inline void dump_node(const field_sentry::dom::Node& n, int depth, std::string& out) {
  using field_sentry::dom::NodeKind;
  std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
  if (n.kind() == NodeKind::Comment) return;
  if (n.kind() == NodeKind::Text) {
    std::string t = field_sentry::text::collapse_whitespace(n.data());
    std::string_view trimmed = field_sentry::text::trim(t);
    if (!trimmed.empty()) out += pad + "\"" + std::string(trimmed) + "\"\n";
    return;
  }
  out += pad + n.tag();
  for (const auto& a : n.attributes()) out += " " + a.name + "=\"" + a.value + "\"";
  out += "\n";
  for (const auto& c : n.children()) dump_node(*c, depth + 1, out);
}

inline std::string dump(const field_sentry::dom::Document& doc) {
  std::string out;
  dump_node(doc.root(), 0, out);
  return out;
}

// Set by ctest; empty when the binary runs on its own.
inline std::string cli_path() {
  const char* p = std::getenv("FS_CLI");
  return p ? p : "";
}

struct Exec {
  int status = -1;
  std::string out;
};

// Runs a shell command and collects stdout.
inline Exec run(const std::string& cmd) {
  Exec r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int st = pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

}  // namespace fixtures
