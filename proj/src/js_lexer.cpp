#include "field_sentry/js_lexer.hpp"

#include <array>
#include <cctype>

#include "field_sentry/text.hpp"

namespace field_sentry::js {
namespace {

constexpr std::array<std::string_view, 44> kPuncts = {
    ">>>=", "...", "===", "!==", "**=", "<<=", ">>=", ">>>", "&&=", "||=", "?\?=",
    "=>",   "==",  "!=",  "<=",  ">=",  "&&",  "||",  "??",  "?.",  "++",  "--",
    "+=",   "-=",  "*=",  "/=",  "%=",  "&=",  "|=",  "^=",  "**",  "<<",  ">>",
    "{",    "}",   "(",   ")",   "[",   "]",   ";",   ",",   "<",   ">",   "=",
};

constexpr std::array<std::string_view, 12> kRegexAfterKeyword = {
    "return", "typeof", "case", "in", "of", "new", "delete", "void", "throw", "instanceof",
    "do", "else",
};

bool ident_start(unsigned char c) {
  return std::isalpha(c) || c == '_' || c == '$' || c == '\\' || c >= 0x80;
}

bool ident_part(unsigned char c) { return ident_start(c) || std::isdigit(c); }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    lex_until(false);
    return std::move(tokens_);
  }

 private:
  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::vector<Token> tokens_;

  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }

  void advance() {
    if (src_[pos_] == '\n') ++line_;
    ++pos_;
  }

  void push(TokenKind kind, std::string text, std::size_t begin, int line) {
    tokens_.push_back(Token{kind, std::move(text), begin, pos_, line, line_});
  }

  bool regex_allowed() const {
    if (tokens_.empty()) return true;
    const Token& prev = tokens_.back();
    switch (prev.kind) {
      case TokenKind::Number:
      case TokenKind::String:
      case TokenKind::Template:
      case TokenKind::Regex:
        return false;
      case TokenKind::Identifier:
        for (auto kw : kRegexAfterKeyword) {
          if (prev.text == kw) return true;
        }
        return false;
      case TokenKind::Punct:
        return prev.text != ")" && prev.text != "]" && prev.text != "++" && prev.text != "--";
    }
    return true;
  }

  // Lexes until end of input, or until the `}` closing a template
  // substitution when `in_substitution` is set.
  void lex_until(bool in_substitution) {
    int depth = 0;
    while (pos_ < src_.size()) {
      char c = peek();
      if (c == '\n' || c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
        advance();
        continue;
      }
      if (c == '/' && peek(1) == '/') {
        while (pos_ < src_.size() && peek() != '\n') advance();
        continue;
      }
      if (c == '/' && peek(1) == '*') {
        advance();
        advance();
        while (pos_ < src_.size() && !(peek() == '*' && peek(1) == '/')) advance();
        if (pos_ < src_.size()) {
          advance();
          advance();
        }
        continue;
      }
      if (in_substitution) {
        if (c == '{') ++depth;
        if (c == '}') {
          if (depth == 0) {
            advance();
            return;
          }
          --depth;
        }
      }
      std::size_t begin = pos_;
      int line = line_;
      if (c == '"' || c == '\'') {
        push(TokenKind::String, lex_string(c), begin, line);
      } else if (c == '`') {
        lex_template();
      } else if (ident_start(static_cast<unsigned char>(c))) {
        while (pos_ < src_.size() && ident_part(static_cast<unsigned char>(peek()))) {
          if (peek() == '\\') advance();
          if (pos_ < src_.size()) advance();
        }
        push(TokenKind::Identifier, std::string(src_.substr(begin, pos_ - begin)), begin, line);
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '_')) {
          advance();
        }
        push(TokenKind::Number, std::string(src_.substr(begin, pos_ - begin)), begin, line);
      } else if (c == '/' && regex_allowed() && lex_regex()) {
        push(TokenKind::Regex, std::string(src_.substr(begin, pos_ - begin)), begin, line);
      } else {
        lex_punct();
        push(TokenKind::Punct, std::string(src_.substr(begin, pos_ - begin)), begin, line);
      }
    }
  }

  void lex_punct() {
    for (auto p : kPuncts) {
      if (src_.substr(pos_, p.size()) == p) {
        for (std::size_t i = 0; i < p.size(); ++i) advance();
        return;
      }
    }
    advance();
  }

  // Appends the cooked form of one escape sequence; pos_ is on the backslash.
  void cook_escape(std::string& out) {
    advance();
    if (pos_ >= src_.size()) return;
    char e = peek();
    auto hex_value = [&](std::size_t count) -> long {
      long v = 0;
      for (std::size_t i = 0; i < count; ++i) {
        char h = peek(1 + i);
        if (!std::isxdigit(static_cast<unsigned char>(h))) return -1;
        v = v * 16 + (std::isdigit(static_cast<unsigned char>(h)) ? h - '0' : (std::tolower(h) - 'a' + 10));
      }
      return v;
    };
    switch (e) {
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      case 'b': out.push_back('\b'); break;
      case 'f': out.push_back('\f'); break;
      case 'v': out.push_back('\v'); break;
      case '0': out.push_back('\0'); break;
      case '\r':
      case '\n':
        break;  // line continuation
      case 'x': {
        long v = hex_value(2);
        if (v >= 0) {
          text::append_utf8(out, static_cast<char32_t>(v));
          advance();
          advance();
        } else {
          out.push_back('x');
        }
        break;
      }
      case 'u': {
        long v = hex_value(4);
        if (v >= 0) {
          text::append_utf8(out, static_cast<char32_t>(v));
          for (int i = 0; i < 4; ++i) advance();
        } else {
          out.push_back('u');
        }
        break;
      }
      default: out.push_back(e);
    }
    advance();
  }

  std::string lex_string(char quote) {
    std::string out;
    advance();
    while (pos_ < src_.size()) {
      char c = peek();
      if (c == quote) {
        advance();
        break;
      }
      if (c == '\n') break;  // unterminated; stop at the line end
      if (c == '\\') {
        cook_escape(out);
        continue;
      }
      out.push_back(c);
      advance();
    }
    return out;
  }

  void lex_template() {
    std::size_t index = tokens_.size();
    push(TokenKind::Template, "", pos_, line_);
    advance();
    std::string cooked;
    bool substituted = false;
    while (pos_ < src_.size()) {
      char c = peek();
      if (c == '`') {
        advance();
        break;
      }
      if (c == '\\') {
        cook_escape(cooked);
        continue;
      }
      if (c == '$' && peek(1) == '{') {
        substituted = true;
        advance();
        advance();
        lex_until(true);
        continue;
      }
      cooked.push_back(c);
      advance();
    }
    Token& t = tokens_[index];
    t.text = std::move(cooked);
    t.has_substitution = substituted;
    t.end = pos_;
    t.end_line = line_;
  }

  bool lex_regex() {
    std::size_t save_pos = pos_;
    int save_line = line_;
    advance();
    bool in_class = false;
    while (pos_ < src_.size()) {
      char c = peek();
      if (c == '\n') break;
      if (c == '\\') {
        advance();
        if (pos_ < src_.size() && peek() != '\n') advance();
        continue;
      }
      if (c == '[') in_class = true;
      if (c == ']') in_class = false;
      if (c == '/' && !in_class) {
        advance();
        while (pos_ < src_.size() && ident_part(static_cast<unsigned char>(peek()))) advance();
        return true;
      }
      advance();
    }
    pos_ = save_pos;
    line_ = save_line;
    return false;
  }
};

}  // namespace

std::vector<Token> tokenize(std::string_view source) { return Lexer(source).run(); }

std::size_t skip_balanced(const std::vector<Token>& tokens, std::size_t open_index) {
  int depth = 0;
  for (std::size_t i = open_index; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    if (t.kind != TokenKind::Punct) continue;
    if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
    if (t.text == ")" || t.text == "]" || t.text == "}") {
      if (--depth == 0) return i;
    }
  }
  return tokens.size();
}

std::size_t expression_end(const std::vector<Token>& t, std::size_t begin) {
  int depth = 0;
  for (std::size_t i = begin; i < t.size(); ++i) {
    const Token& tok = t[i];
    if (depth == 0 && i > begin && tok.line > t[i - 1].end_line) {
      const Token& prev = t[i - 1];
      bool continues = (prev.kind == TokenKind::Punct && prev.text != ")" && prev.text != "]" &&
                        prev.text != "}" && prev.text != "++" && prev.text != "--") ||
                       (tok.kind == TokenKind::Punct && tok.text != "(" && tok.text != "[" &&
                        tok.text != "{" && tok.text != "++" && tok.text != "--" &&
                        tok.text != "!" && tok.text != "~");
      if (!continues) return i;
    }
    if (tok.kind != TokenKind::Punct) continue;
    if (tok.text == "(" || tok.text == "[" || tok.text == "{") ++depth;
    if (tok.text == ")" || tok.text == "]" || tok.text == "}") {
      if (--depth < 0) return i;
    }
    if (depth == 0 && (tok.text == ";" || tok.text == ",")) return i;
  }
  return t.size();
}

}  // namespace field_sentry::js
