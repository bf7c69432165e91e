#pragma once

// Generated content-script sources with their ground truth: which lines the
// input-selection rule must report and which declarations the instrumenter
// must log. Every statement shape is built here with its answer attached, so
// no parsing is involved on the oracle side.

#include <random>
#include <string>
#include <vector>

namespace oracle {

struct JsFinding {
  int line;
  std::string call;
  std::string literal;  // cooked value
  bool operator==(const JsFinding&) const = default;
};

struct JsEdit {
  int line;
  std::string variable;
  bool operator==(const JsEdit&) const = default;
};

struct JsProgram {
  std::string source;
  std::vector<JsFinding> findings;
  std::vector<JsEdit> edits;
};

class JsGrammar {
 public:
  explicit JsGrammar(std::uint64_t seed) : rng_(seed) {}

  JsProgram program() {
    lines_.clear();
    prog_ = {};
    eol_ = chance(0.2) ? "\r\n" : "\n";
    int n = between(3, 12);
    for (int i = 0; i < n; ++i) statement(0);
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      prog_.source += lines_[i];
      if (i + 1 < lines_.size() || chance(0.8)) prog_.source += eol_;
    }
    return prog_;
  }

 private:
  struct Arg {
    std::string source;
    bool literal = false;  // string or substitution-free template
    std::string cooked;
  };

  std::mt19937_64 rng_;
  std::vector<std::string> lines_;
  JsProgram prog_;
  std::string eol_;
  int var_counter_ = 0;

  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  int between(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng_)];
  }

  int next_line() const { return static_cast<int>(lines_.size()) + 1; }
  std::string indent(int depth) const { return std::string(static_cast<std::size_t>(depth) * 2, ' '); }
  std::string fresh_var() {
    static const std::vector<std::string> stems = {"els", "field", "pw", "node", "$box", "_in", "x"};
    return pick(stems) + std::to_string(var_counter_++);
  }

  static bool has_input(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s.find("input") != std::string::npos;
  }

  const std::string& listed_call() {
    static const std::vector<std::string> v = {"querySelector", "querySelectorAll", "getElementById",
                                               "getElementsByClassName", "getElementsByTagName",
                                               "getElementsByName"};
    return pick(v);
  }
  const std::string& other_call() {
    static const std::vector<std::string> v = {"createElement", "querySelectorAllX", "getAttribute",
                                               "closest", "matches", "log"};
    return pick(v);
  }
  const std::string& receiver() {
    static const std::vector<std::string> v = {"document", "form", "root", "this.shadow", "el"};
    return pick(v);
  }

  Arg arg() {
    static const std::vector<std::string> texts = {"input", "INPUT_user", "form input[type=password]",
                                                   "#login-input", ".btn", "#pw", "div span", "inp ut",
                                                   "Input", "password", "textarea"};
    Arg a;
    int kind = between(0, 9);
    if (kind <= 5) {
      a.cooked = pick(texts);
      char q = chance(0.5) ? '"' : '\'';
      a.source = q + a.cooked + q;
      a.literal = true;
    } else if (kind == 6) {
      a.cooked = pick(texts);
      a.source = "`" + a.cooked + "`";
      a.literal = true;
    } else if (kind == 7) {
      // Escaped spelling that cooks to "input".
      a.cooked = "input";
      a.source = "\"\\x69nput\"";
      a.literal = true;
    } else if (kind == 8) {
      a.source = "`${prefix}input`";
    } else {
      a.source = pick(std::vector<std::string>{"sel", "selectors[0]", "config.target"});
    }
    return a;
  }

  // `recv.call(arg)`; records a finding on `line` when the rule applies.
  std::string call_expr(int line, bool listed, Arg* out_arg = nullptr) {
    std::string call = listed ? listed_call() : other_call();
    Arg a = arg();
    if (listed && a.literal && has_input(a.cooked)) prog_.findings.push_back({line, call, a.cooked});
    if (out_arg) *out_arg = a;
    return receiver() + "." + call + "(" + a.source + ")";
  }

  void statement(int depth) {
    int kind = between(0, 13);
    std::string pad = indent(depth);
    int line = next_line();
    switch (kind) {
      case 0:
      case 1: {  // declaration from a selection call
        std::string kw = pick(std::vector<std::string>{"var", "let", "const"});
        std::string v = fresh_var();
        bool listed = chance(0.8);
        std::string rhs = call_expr(line, listed);
        if (chance(0.3)) rhs += pick(std::vector<std::string>{".value", "[0]", ".item(0)"});
        if (listed) prog_.edits.push_back({line, v});
        lines_.push_back(pad + kw + " " + v + " = " + rhs + (chance(0.85) ? ";" : ""));
        break;
      }
      case 2: {  // plain assignment
        std::string v = fresh_var();
        std::string rhs = call_expr(line, true);
        prog_.edits.push_back({line, v});
        lines_.push_back(pad + v + " = " + rhs + ";");
        break;
      }
      case 3: {  // call used as an expression statement
        lines_.push_back(pad + call_expr(line, chance(0.7)) + ".forEach(function (e) { seen++; });");
        break;
      }
      case 4: {  // comments that mention the calls
        if (chance(0.5)) {
          lines_.push_back(pad + "// document.querySelector(\"input\") is how " + fresh_var() + " = q() works");
        } else {
          lines_.push_back(pad + "/* var a = document.getElementById(\"input\");");
          lines_.push_back(pad + "   b = x.querySelectorAll('input') */");
        }
        break;
      }
      case 5: {  // call text inside a string or regex
        std::string v = fresh_var();
        if (chance(0.5)) {
          lines_.push_back(pad + "var " + v + " = \"document.querySelector('input')\";");
        } else {
          lines_.push_back(pad + "var " + v + " = /querySelector\\(\"input\"\\)/g;");
        }
        break;
      }
      case 6: {  // unrelated declaration
        lines_.push_back(pad + "let " + fresh_var() + " = " + std::to_string(between(0, 99)) + " + 1;");
        break;
      }
      case 7: {  // block with nested statements
        if (depth >= 2) {
          lines_.push_back(pad + "count += 1;");
          break;
        }
        std::string head = pick(std::vector<std::string>{"if (ready) {", "function setup(root) {",
                                                         "for (var i = 0; i < 3; i++) {",
                                                         "document.addEventListener(\"load\", function () {"});
        bool listener = head.back() == '{' && head.find("addEventListener") != std::string::npos;
        lines_.push_back(pad + head);
        int inner = between(1, 3);
        for (int i = 0; i < inner; ++i) statement(depth + 1);
        lines_.push_back(pad + (listener ? "});" : "}"));
        break;
      }
      case 8: {  // call split over several lines
        std::string v = fresh_var();
        std::string call = listed_call();
        Arg a = arg();
        if (a.literal && has_input(a.cooked)) prog_.findings.push_back({line, call, a.cooked});
        prog_.edits.push_back({line, v});
        lines_.push_back(pad + "const " + v + " = " + receiver() + "." + call + "(");
        lines_.push_back(pad + "  " + a.source);
        lines_.push_back(pad + ");");
        break;
      }
      case 9: {  // declaration without a selection call at the top level
        std::string v = fresh_var();
        lines_.push_back(pad + "var " + v + " = " + call_expr(line, false) + ";");
        break;
      }
      case 10: {  // function whose name shadows a listed call
        std::string name = listed_call();
        lines_.push_back(pad + "function " + name + "(\"input\") { return null; }");
        break;
      }
      case 11: {  // selection call inside a callback body on the right-hand side
        std::string v = fresh_var();
        Arg a;
        std::string inner = call_expr(line, true, &a);
        lines_.push_back(pad + "var " + v + " = wrap(function () { return " + inner + "; });");
        break;
      }
      case 12: {  // object literal holding selector strings
        lines_.push_back(pad + "var " + fresh_var() + " = { sel: \"input\", other: 'querySelector' };");
        break;
      }
      default: {  // call with a second argument
        std::string call = listed_call();
        Arg a = arg();
        if (a.literal && has_input(a.cooked)) prog_.findings.push_back({line, call, a.cooked});
        lines_.push_back(pad + receiver() + "." + call + "(" + a.source + ", opts);");
        break;
      }
    }
  }
};

}  // namespace oracle
