#include "document_state.hpp"
#include "field_sentry/error.hpp"
#include "field_sentry/text.hpp"

namespace field_sentry::dom {
namespace {

bool is_name_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '-' ||
         static_cast<unsigned char>(c) >= 0x80;
}

bool is_name_char(char c) { return is_name_start(c) || (c >= '0' && c <= '9'); }

class SelectorParser {
 public:
  explicit SelectorParser(std::string_view src) : src_(src) {}

  std::vector<Selector::Complex> parse() {
    std::vector<Selector::Complex> groups;
    while (true) {
      skip_space();
      groups.push_back(parse_complex());
      skip_space();
      if (at_end()) break;
      if (peek() != ',') fail("expected ',' or end of selector");
      ++pos_;
    }
    return groups;
  }

 private:
  Selector::Complex parse_complex() {
    Selector::Complex complex;
    complex.push_back(parse_compound());
    while (true) {
      std::size_t before = pos_;
      skip_space();
      if (at_end() || peek() == ',') return complex;
      if (pos_ == before) fail("unsupported combinator or character");
      complex.push_back(parse_compound());
    }
  }

  Selector::Compound parse_compound() {
    Selector::Compound compound;
    bool any = false;
    if (!at_end() && is_name_start(peek())) {
      compound.tag = text::to_lower(parse_name());
      any = true;
    }
    while (!at_end()) {
      char c = peek();
      if (c == '#') {
        ++pos_;
        compound.ids.push_back(parse_name());
      } else if (c == '.') {
        ++pos_;
        compound.classes.push_back(parse_name());
      } else if (c == '[') {
        ++pos_;
        compound.attributes.push_back(parse_attribute());
      } else {
        break;
      }
      any = true;
    }
    if (!any) fail("empty compound selector");
    return compound;
  }

  Selector::AttributeTest parse_attribute() {
    Selector::AttributeTest test;
    skip_space();
    test.name = text::to_lower(parse_name());
    skip_space();
    if (at_end()) fail("unterminated attribute selector");
    if (peek() == ']') {
      ++pos_;
      return test;
    }
    if (peek() == '=') {
      test.op = Selector::AttributeTest::Op::Equals;
      ++pos_;
    } else if (peek() == '*' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '=') {
      test.op = Selector::AttributeTest::Op::Contains;
      pos_ += 2;
    } else {
      fail("unsupported attribute operator");
    }
    skip_space();
    if (at_end()) fail("missing attribute value");
    if (peek() == '"' || peek() == '\'') {
      test.value = parse_string();
    } else {
      std::size_t start = pos_;
      while (!at_end() && is_name_char(peek())) ++pos_;
      if (pos_ == start) fail("missing attribute value");
      test.value = std::string(src_.substr(start, pos_ - start));
    }
    skip_space();
    if (at_end() || peek() != ']') fail("expected ']'");
    ++pos_;
    return test;
  }

  std::string parse_string() {
    char quote = src_[pos_++];
    std::string out;
    while (true) {
      if (at_end()) fail("unterminated string");
      char c = src_[pos_++];
      if (c == quote) return out;
      if (c == '\\') {
        if (at_end()) fail("dangling escape");
        c = src_[pos_++];
      }
      out.push_back(c);
    }
  }

  std::string parse_name() {
    if (at_end() || !is_name_start(peek())) fail("expected a name");
    std::size_t start = pos_;
    while (!at_end() && is_name_char(peek())) ++pos_;
    return std::string(src_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (!at_end() && text::is_space(peek())) ++pos_;
  }
  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }

  [[noreturn]] void fail(const char* what) const {
    throw Error(ErrorCode::InvalidSelector,
                std::string(what) + " at offset " + std::to_string(pos_) + " in '" +
                    std::string(src_) + "'");
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

bool has_class(const Node& el, std::string_view cls) {
  auto attr = el.attribute("class");
  if (!attr) return false;
  for (auto token : text::split_whitespace(*attr)) {
    if (token == cls) return true;
  }
  return false;
}

bool matches_compound(const Node& el, const Selector::Compound& c) {
  if (!el.is_element()) return false;
  if (c.tag && el.tag() != *c.tag) return false;
  for (const auto& id : c.ids) {
    if (!el.attribute_equals("id", id)) return false;
  }
  for (const auto& cls : c.classes) {
    if (!has_class(el, cls)) return false;
  }
  for (const auto& test : c.attributes) {
    auto value = el.attribute(test.name);
    if (!value) return false;
    switch (test.op) {
      case Selector::AttributeTest::Op::Exists:
        break;
      case Selector::AttributeTest::Op::Equals:
        if (*value != test.value) return false;
        break;
      case Selector::AttributeTest::Op::Contains:
        if (test.value.empty() || value->find(test.value) == std::string_view::npos) {
          return false;
        }
        break;
    }
  }
  return true;
}

bool matches_complex(const Node& el, const Selector::Complex& complex) {
  if (!matches_compound(el, complex.back())) return false;
  const Node* cursor = el.parent();
  // Descendant-only chains: taking the nearest matching ancestor is optimal.
  for (std::size_t i = complex.size() - 1; i-- > 0;) {
    while (cursor && !matches_compound(*cursor, complex[i])) cursor = cursor->parent();
    if (!cursor) return false;
    cursor = cursor->parent();
  }
  return true;
}

void collect(Node& node, const Selector& selector, std::vector<Node*>& out) {
  for (const auto& child : node.children()) {
    if (!child->is_element()) continue;
    if (selector.matches(*child)) out.push_back(child.get());
    collect(*child, selector, out);
  }
}

void audit_matches(detail::DocumentState* state, const std::vector<Node*>& matches,
                   const Selector& selector) {
  if (!state) return;
  for (Node* match : matches) {
    if (is_sensitive(*match)) {
      state->record(AuditKind::SelectedSensitive, match->id(), selector.source());
    }
  }
}

}  // namespace

Selector Selector::compile(std::string_view source) {
  Selector selector;
  selector.source_ = std::string(source);
  selector.groups_ = SelectorParser(source).parse();
  return selector;
}

bool Selector::matches(const Node& element) const {
  for (const auto& complex : groups_) {
    if (matches_complex(element, complex)) return true;
  }
  return false;
}

std::vector<Node*> query_select_all(Node& scope, const Selector& selector) {
  std::vector<Node*> out;
  collect(scope, selector, out);
  audit_matches(scope.state_, out, selector);
  return out;
}

std::vector<Node*> query_select_all(Document& doc, const Selector& selector) {
  Node& root = doc.root();
  std::vector<Node*> out;
  if (selector.matches(root)) out.push_back(&root);
  collect(root, selector, out);
  audit_matches(root.state_, out, selector);
  return out;
}

std::vector<Node*> query_select_all(Document& doc, std::string_view selector) {
  return query_select_all(doc, Selector::compile(selector));
}

}  // namespace field_sentry::dom
