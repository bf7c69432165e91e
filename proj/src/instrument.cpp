#include "field_sentry/instrument.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>

#include "field_sentry/archive.hpp"
#include "field_sentry/js_lexer.hpp"
#include "field_sentry/text.hpp"

namespace field_sentry::instrument {

using js::Token;
using js::TokenKind;

namespace {

const std::set<std::string_view> kKeywords = {
    "var",    "let",   "const",  "return", "if",       "else",    "for",    "while",
    "do",     "switch", "case",  "default", "break",   "continue", "function", "class",
    "new",    "typeof", "delete", "void",  "throw",    "try",     "catch",  "finally",
    "await",  "yield", "async",  "import", "export",   "this",    "super",  "in",
    "of",     "instanceof", "with", "debugger", "null", "true",   "false",
};

const std::regex kIdentifier(R"(^[A-Za-z_$][\w$]*$)");

struct Line {
  std::string_view content;
  std::string_view eol;  // "", "\n" or "\r\n"
};

std::vector<Line> split_lines(std::string_view s) {
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start < s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back({s.substr(start), ""});
      break;
    }
    std::size_t content_end = (nl > start && s[nl - 1] == '\r') ? nl - 1 : nl;
    lines.push_back({s.substr(start, content_end - start), s.substr(content_end, nl + 1 - content_end)});
    start = nl + 1;
  }
  return lines;
}

std::string_view leading_blank(std::string_view s) {
  std::size_t n = 0;
  while (n < s.size() && (s[n] == ' ' || s[n] == '\t')) ++n;
  return s.substr(0, n);
}

bool is_open(const Token& t) { return t.kind == TokenKind::Punct && (t.text == "(" || t.text == "[" || t.text == "{"); }
bool is_close(const Token& t) { return t.kind == TokenKind::Punct && (t.text == ")" || t.text == "]" || t.text == "}"); }

class Rewriter {
 public:
  Rewriter(std::string_view source, std::string_view file)
      : source_(source), file_(file), t_(js::tokenize(source)) {
    context_.resize(t_.size());
    depth_.resize(t_.size());
    opener_.assign(t_.size(), t_.size());
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (is_close(t_[i]) && !stack.empty()) {
        opener_[i] = stack.back();
        stack.pop_back();
      }
      context_[i] = stack.empty() ? '\0' : t_[stack.back()].text[0];
      depth_[i] = stack.size();
      if (is_open(t_[i])) stack.push_back(i);
    }
  }

  InstrumentResult run() {
    InstrumentResult result;
    std::map<int, std::vector<std::pair<std::string, std::string>>> inserts;  // line -> (indent, stmt)
    auto lines = split_lines(source_);

    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (!statement_start(i)) continue;
      std::size_t name_index;
      std::size_t rhs;
      if ((t_[i].is("var") || t_[i].is("let") || t_[i].is("const")) && i + 2 < t_.size() &&
          t_[i + 1].kind == TokenKind::Identifier && t_[i + 2].is("=")) {
        name_index = i + 1;
        rhs = i + 3;
      } else if (t_[i].kind == TokenKind::Identifier && !kKeywords.count(t_[i].text) &&
                 i + 1 < t_.size() && t_[i + 1].is("=")) {
        name_index = i;
        rhs = i + 2;
      } else {
        continue;
      }
      std::size_t end = js::expression_end(t_, rhs);
      if (!has_selection_call(rhs, end)) continue;
      const std::string& variable = t_[name_index].text;

      // Trailing declarators of the same statement.
      while (end < t_.size() && t_[end].is(",")) {
        std::size_t j = end + 1;
        if (j + 1 < t_.size() && t_[j].kind == TokenKind::Identifier && t_[j + 1].is("=")) {
          std::size_t sub_end = js::expression_end(t_, j + 2);
          if (has_selection_call(j + 2, sub_end)) {
            result.skipped.push_back(
                {std::string(file_), t_[j].line, t_[j].text, "chained declarator"});
          }
          end = sub_end;
        } else {
          end = js::expression_end(t_, j);
        }
      }
      std::size_t last = (end < t_.size() && t_[end].is(";")) ? end : end - 1;
      int insert_after = t_[last].end_line;
      if (!std::regex_match(variable, kIdentifier)) {
        result.skipped.push_back({std::string(file_), t_[i].line, variable, "identifier outside marker grammar"});
        continue;
      }
      if (!line_closes_statement(i, insert_after)) {
        result.skipped.push_back({std::string(file_), t_[i].line, variable, "statement ends mid-line"});
        continue;
      }
      std::string stmt = log_statement(variable);
      std::string indent(leading_blank(lines[static_cast<std::size_t>(t_[i].line - 1)].content));
      inserts[insert_after].emplace_back(indent, stmt);
      result.edits.push_back({std::string(file_), t_[i].line, variable, stmt});
    }

    std::string default_eol = "\n";
    for (const auto& l : lines) {
      if (!l.eol.empty()) {
        default_eol = std::string(l.eol);
        break;
      }
    }
    std::string& out = result.text;
    out.reserve(source_.size() + inserts.size() * 200);
    for (std::size_t n = 0; n < lines.size(); ++n) {
      out += lines[n].content;
      out += lines[n].eol;
      auto it = inserts.find(static_cast<int>(n + 1));
      if (it == inserts.end()) continue;
      for (const auto& [indent, stmt] : it->second) {
        if (lines[n].eol.empty()) {
          out += default_eol;
          out += indent;
          out += stmt;
        } else {
          out += indent;
          out += stmt;
          out += lines[n].eol;
        }
      }
    }
    return result;
  }

 private:
  std::string_view source_;
  std::string_view file_;
  std::vector<Token> t_;
  std::vector<char> context_;
  std::vector<std::size_t> depth_;
  std::vector<std::size_t> opener_;  // for closers: index of the matching opener

  bool statement_start(std::size_t i) const {
    if (context_[i] == '(' || context_[i] == '[') return false;
    if (i == 0) return true;
    const Token& prev = t_[i - 1];
    if (prev.is(";") || prev.is("{") || prev.is("}")) return true;
    if (prev.end_line >= t_[i].line) return false;
    switch (prev.kind) {
      case TokenKind::Identifier:
        return !kKeywords.count(prev.text) || prev.is("this") || prev.is("null") ||
               prev.is("true") || prev.is("false");
      case TokenKind::Number:
      case TokenKind::String:
      case TokenKind::Template:
      case TokenKind::Regex:
        return true;
      case TokenKind::Punct:
        if (prev.text == "]") return true;
        if (prev.text == ")") {
          // `if (x)` and friends own the next line; a log line there would
          // detach an `else` or change what the condition guards.
          std::size_t open = opener_[i - 1];
          if (open == 0 || open >= t_.size()) return false;
          const Token& head = t_[open - 1];
          return !(head.is("if") || head.is("while") || head.is("for") || head.is("with"));
        }
        return false;
    }
    return false;
  }

  bool has_selection_call(std::size_t begin, std::size_t end) const {
    int braces = 0;
    for (std::size_t k = begin; k < end && k < t_.size(); ++k) {
      if (t_[k].is("{")) ++braces;
      if (t_[k].is("}")) --braces;
      if (braces == 0 && t_[k].kind == TokenKind::Identifier && ext::is_selection_call(t_[k].text) &&
          k + 1 < t_.size() && t_[k + 1].is("(")) {
        return true;
      }
    }
    return false;
  }

  // True when inserting a line after `line` leaves the code around it intact:
  // no token straddles the break and bracket depth is back where the
  // statement began.
  bool line_closes_statement(std::size_t start, int line) const {
    std::size_t depth_after = depth_[start];
    for (std::size_t k = start; k < t_.size() && t_[k].line <= line; ++k) {
      if (t_[k].end_line > line) return false;
      depth_after = depth_[k] + (is_open(t_[k]) ? 1 : 0);
    }
    return depth_after == depth_[start];
  }
};

}  // namespace

std::string log_statement(std::string_view variable) {
  std::string v(variable);
  return "console.log(\"FIELD_SENTRY::" + v +
         "::\" + (function (v) { try { if (typeof v === \"string\") return v; "
         "if (v && typeof v.value === \"string\") return v.value; "
         "if (v && typeof v !== \"function\" && typeof v.length === \"number\") { var o = []; "
         "for (var i = 0; i < v.length; i++) { if (v[i] && typeof v[i].value === \"string\") "
         "o.push(v[i].value); } if (o.length) return o.join(\",\"); } } catch (e) {} "
         "return \"<novalue>\"; })(" +
         v + "));";
}

InstrumentResult instrument_source(std::string_view source, std::string_view file) {
  return Rewriter(source, file).run();
}

std::string strip_instrumentation(std::string_view instrumented) {
  auto lines = split_lines(instrumented);
  std::vector<Line> kept;
  kept.reserve(lines.size());
  for (const auto& line : lines) {
    std::string_view body = line.content.substr(leading_blank(line.content).size());
    if (body.starts_with(kLogPrefix)) {
      if (line.eol.empty() && !kept.empty()) kept.back().eol = "";
      continue;
    }
    kept.push_back(line);
  }
  std::string out;
  out.reserve(instrumented.size());
  for (const auto& line : kept) {
    out += line.content;
    out += line.eol;
  }
  return out;
}

std::string repack_instrumented(const ext::ExtensionPackage& pkg,
                                std::vector<InstrumentationEdit>* edits) {
  std::vector<archive::Entry> entries;
  entries.push_back({"manifest.json", pkg.manifest_text});
  for (const auto& script : pkg.scripts) {
    if (pkg.is_content_script(script.path)) {
      auto result = instrument_source(script.source, script.path);
      if (edits) edits->insert(edits->end(), result.edits.begin(), result.edits.end());
      entries.push_back({script.path, std::move(result.text)});
    } else {
      entries.push_back({script.path, script.source});
    }
  }
  for (const auto& [path, data] : pkg.resources) entries.push_back({path, data});
  std::sort(entries.begin(), entries.end(),
            [](const archive::Entry& a, const archive::Entry& b) { return a.path < b.path; });
  return archive::write_zip(entries);
}

CaptureVerdict detect_capture(std::string_view log, std::string_view probe_secret) {
  static const std::regex kLine(R"(FIELD_SENTRY::([A-Za-z_$][\w$]*)::(.*)$)");
  CaptureVerdict verdict;
  int line_no = 0;
  for (auto raw : text::split(log, '\n')) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    std::string line(raw);
    std::smatch m;
    if (!std::regex_search(line, m, kLine)) continue;
    std::string value = m[2].str();
    if (probe_secret.empty() || value.find(probe_secret) == std::string::npos) continue;
    verdict.matching_lines.push_back({line_no, m[1].str(), std::move(value)});
  }
  verdict.captured = !verdict.matching_lines.empty();
  return verdict;
}

}  // namespace field_sentry::instrument
