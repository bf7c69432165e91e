#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// A forgiving JavaScript tokenizer. It never fails: anything it does not
// understand becomes a one-byte punctuator.
namespace field_sentry::js {

enum class TokenKind { Identifier, Punct, String, Template, Number, Regex };

struct Token {
  TokenKind kind;
  std::string text;     // raw source for most tokens, cooked value for String
  std::size_t begin;    // byte offsets into the source
  std::size_t end;
  int line;             // 1-based line of the first byte
  int end_line;         // line of the last byte
  bool has_substitution = false;  // Template only

  bool is(std::string_view punct_or_name) const {
    return (kind == TokenKind::Punct || kind == TokenKind::Identifier) && text == punct_or_name;
  }
  bool is_literal_string() const {
    return kind == TokenKind::String || (kind == TokenKind::Template && !has_substitution);
  }
};

// Template substitutions are lexed too; their tokens follow the Template
// token in the stream.
std::vector<Token> tokenize(std::string_view source);

// Index of the bracket closing tokens[open_index], or tokens.size().
std::size_t skip_balanced(const std::vector<Token>& tokens, std::size_t open_index);

// Index one past the last token of the expression starting at `begin`: stops
// at `;` or `,` at depth zero, at an unmatched closing bracket, or at a line
// break where automatic semicolon insertion would end the statement.
std::size_t expression_end(const std::vector<Token>& tokens, std::size_t begin);

}  // namespace field_sentry::js
