#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>

#include "field_sentry/dom.hpp"
#include "field_sentry/text.hpp"

namespace field_sentry::dom {
namespace {

// ---------------------------------------------------------------------------
// Character references

struct NamedReference {
  std::string_view name;  // with the trailing ';' where the table has one
  std::string_view utf8;
};

#include "entities.inc"

const NamedReference* find_reference(std::string_view name) {
  auto it = std::lower_bound(kNamedReferences.begin(), kNamedReferences.end(), name,
                             [](const NamedReference& r, std::string_view n) { return r.name < n; });
  return it != kNamedReferences.end() && it->name == name ? &*it : nullptr;
}

// Decodes the reference starting at s[i] == '&'. Returns the number of bytes
// consumed, or 0 when the text is not a reference.
std::size_t decode_reference(std::string_view s, std::size_t i, bool in_attribute,
                             std::string& out) {
  std::size_t j = i + 1;
  if (j < s.size() && s[j] == '#') {
    ++j;
    int base = 10;
    if (j < s.size() && (s[j] == 'x' || s[j] == 'X')) {
      base = 16;
      ++j;
    }
    std::size_t digits_start = j;
    while (j < s.size() && std::isxdigit(static_cast<unsigned char>(s[j])) &&
           (base == 16 || std::isdigit(static_cast<unsigned char>(s[j])))) {
      ++j;
    }
    if (j == digits_start) return 0;
    std::uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(s.data() + digits_start, s.data() + j, value, base);
    if (ec != std::errc() || value == 0) value = 0xFFFD;
    if (j < s.size() && s[j] == ';') ++j;
    text::append_utf8(out, static_cast<char32_t>(value));
    return j - i;
  }
  std::size_t name_start = j;
  while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j]))) ++j;
  if (j == name_start) return 0;
  std::size_t run = j - name_start + (j < s.size() && s[j] == ';' ? 1 : 0);
  // Longest table entry that prefixes the run.
  for (std::size_t len = std::min<std::size_t>(run, 32); len > 0; --len) {
    const NamedReference* ref = find_reference(s.substr(name_start, len));
    if (!ref) continue;
    std::size_t after = name_start + len;
    if (ref->name.back() != ';' && in_attribute && after < s.size() &&
        (std::isalnum(static_cast<unsigned char>(s[after])) || s[after] == '=')) {
      return 0;
    }
    out += ref->utf8;
    return after - i;
  }
  return 0;
}

std::string decode_entities(std::string_view s, bool in_attribute) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] == '&') {
      std::size_t used = decode_reference(s, i, in_attribute, out);
      if (used > 0) {
        i += used;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tokenizer

enum class TokenType { StartTag, EndTag, Text, Comment, Doctype, Eof };

struct Token {
  TokenType type = TokenType::Eof;
  std::string name;
  std::vector<Attribute> attributes;
  std::string data;
};

bool is_tag_name_char(char c) {
  return !text::is_space(c) && c != '/' && c != '>';
}

bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view src) : src_(src) {}

  Token next() {
    if (!raw_text_end_.empty()) return raw_text();
    if (pos_ >= src_.size()) return Token{};
    if (src_[pos_] == '<') {
      if (auto tag = markup()) return std::move(*tag);
    }
    return text_run();
  }

  // Switches to raw-text scanning until the matching end tag.
  void enter_raw_text(std::string_view tag, bool decode) {
    raw_text_end_ = std::string(tag);
    raw_decode_ = decode;
  }

 private:
  Token text_run() {
    std::size_t start = pos_;
    ++pos_;  // the current byte is text even when it is a lone '<'
    while (pos_ < src_.size() && src_[pos_] != '<') ++pos_;
    Token t;
    t.type = TokenType::Text;
    t.data = decode_entities(src_.substr(start, pos_ - start), false);
    return t;
  }

  Token raw_text() {
    std::size_t start = pos_;
    std::size_t end = src_.size();
    for (std::size_t i = pos_; i + 1 < src_.size(); ++i) {
      if (src_[i] != '<' || src_[i + 1] != '/') continue;
      std::size_t name_end = i + 2 + raw_text_end_.size();
      if (name_end > src_.size()) break;
      if (!text::iequals(src_.substr(i + 2, raw_text_end_.size()), raw_text_end_)) continue;
      if (name_end == src_.size() || !is_tag_name_char(src_[name_end])) {
        end = i;
        break;
      }
    }
    pos_ = end;
    raw_text_end_.clear();
    Token t;
    t.type = TokenType::Text;
    auto body = src_.substr(start, end - start);
    t.data = raw_decode_ ? decode_entities(body, false) : std::string(body);
    if (t.data.empty()) return next();
    return t;
  }

  std::optional<Token> markup() {
    std::string_view rest = src_.substr(pos_);
    if (rest.substr(0, 4) == "<!--") {
      std::size_t close = src_.find("-->", pos_ + 4);
      Token t;
      t.type = TokenType::Comment;
      if (close == std::string_view::npos) {
        t.data = std::string(src_.substr(pos_ + 4));
        pos_ = src_.size();
      } else {
        t.data = std::string(src_.substr(pos_ + 4, close - pos_ - 4));
        pos_ = close + 3;
      }
      return t;
    }
    if (rest.size() >= 2 && (rest[1] == '!' || rest[1] == '?')) {
      std::size_t close = src_.find('>', pos_);
      std::size_t end = close == std::string_view::npos ? src_.size() : close;
      std::string_view inner = src_.substr(pos_ + 2, end - pos_ - 2);
      pos_ = close == std::string_view::npos ? src_.size() : close + 1;
      Token t;
      if (rest[1] == '!' && text::starts_with_icase(inner, "doctype")) {
        t.type = TokenType::Doctype;
        t.data = std::string(text::trim(inner.substr(7)));
      } else {
        t.type = TokenType::Comment;
        t.data = std::string(inner);
      }
      return t;
    }
    if (rest.size() >= 3 && rest[1] == '/' && is_ascii_alpha(rest[2])) {
      pos_ += 2;
      Token t;
      t.type = TokenType::EndTag;
      t.name = read_tag_name();
      std::size_t close = src_.find('>', pos_);
      pos_ = close == std::string_view::npos ? src_.size() : close + 1;
      return t;
    }
    if (rest.size() >= 3 && rest[1] == '/' && rest[2] == '>') {
      pos_ += 3;  // "</>" is dropped entirely
      return next();
    }
    if (rest.size() >= 2 && is_ascii_alpha(rest[1])) {
      ++pos_;
      Token t;
      t.type = TokenType::StartTag;
      t.name = read_tag_name();
      read_attributes(t);
      return t;
    }
    return std::nullopt;
  }

  std::string read_tag_name() {
    std::size_t start = pos_;
    while (pos_ < src_.size() && is_tag_name_char(src_[pos_])) ++pos_;
    return text::to_lower(src_.substr(start, pos_ - start));
  }

  void read_attributes(Token& t) {
    while (pos_ < src_.size()) {
      while (pos_ < src_.size() && (text::is_space(src_[pos_]) || src_[pos_] == '/')) ++pos_;
      if (pos_ >= src_.size()) return;
      if (src_[pos_] == '>') {
        ++pos_;
        return;
      }
      std::size_t name_start = pos_;
      ++pos_;  // first char may be '=' or a quote, treated as part of the name
      while (pos_ < src_.size() && !text::is_space(src_[pos_]) && src_[pos_] != '/' &&
             src_[pos_] != '>' && src_[pos_] != '=') {
        ++pos_;
      }
      std::string name = text::to_lower(src_.substr(name_start, pos_ - name_start));
      std::size_t save = pos_;
      while (pos_ < src_.size() && text::is_space(src_[pos_])) ++pos_;
      std::string value;
      if (pos_ < src_.size() && src_[pos_] == '=') {
        ++pos_;
        while (pos_ < src_.size() && text::is_space(src_[pos_])) ++pos_;
        value = read_attribute_value();
      } else {
        pos_ = save;
      }
      bool duplicate = std::any_of(t.attributes.begin(), t.attributes.end(),
                                   [&](const Attribute& a) { return a.name == name; });
      if (!duplicate) t.attributes.push_back(Attribute{std::move(name), std::move(value)});
    }
  }

  std::string read_attribute_value() {
    if (pos_ >= src_.size()) return {};
    char quote = src_[pos_];
    std::size_t start;
    std::size_t end;
    if (quote == '"' || quote == '\'') {
      start = ++pos_;
      std::size_t close = src_.find(quote, pos_);
      end = close == std::string_view::npos ? src_.size() : close;
      pos_ = close == std::string_view::npos ? src_.size() : close + 1;
    } else {
      start = pos_;
      while (pos_ < src_.size() && !text::is_space(src_[pos_]) && src_[pos_] != '>') ++pos_;
      end = pos_;
    }
    return decode_entities(src_.substr(start, end - start), true);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::string raw_text_end_;
  bool raw_decode_ = false;
};

// ---------------------------------------------------------------------------
// Tree construction

bool one_of(std::string_view tag, std::initializer_list<std::string_view> set) {
  return std::find(set.begin(), set.end(), tag) != set.end();
}

bool closes_paragraph(std::string_view tag) {
  return one_of(tag, {"address", "article", "aside", "blockquote", "center", "details",
                      "dialog", "dir", "div", "dl", "fieldset", "figcaption", "figure",
                      "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header",
                      "hgroup", "hr", "li", "dd", "dt", "main", "menu", "nav", "ol", "p",
                      "pre", "section", "summary", "table", "ul"});
}

bool is_scope_boundary(std::string_view tag) {
  return one_of(tag, {"html", "table", "td", "th", "caption", "button", "object",
                      "applet", "marquee", "template"});
}

bool is_head_content(std::string_view tag) {
  return one_of(tag, {"title", "meta", "link", "style", "script", "base", "noscript"});
}

bool is_heading(std::string_view tag) {
  return tag.size() == 2 && tag[0] == 'h' && tag[1] >= '1' && tag[1] <= '6';
}

class TreeBuilder {
 public:
  explicit TreeBuilder(std::string_view src) : tokenizer_(src) {}

  Document build() {
    head_ = doc_.head();
    body_ = doc_.body();
    for (Token t = tokenizer_.next(); t.type != TokenType::Eof; t = tokenizer_.next()) {
      switch (t.type) {
        case TokenType::Doctype:
          if (doc_.doctype.empty()) doc_.doctype = t.data.empty() ? "html" : t.data;
          break;
        case TokenType::Comment:
          current().append_child(doc_.create_comment(std::move(t.data)));
          break;
        case TokenType::Text:
          on_text(std::move(t.data));
          break;
        case TokenType::StartTag:
          on_start_tag(t);
          break;
        case TokenType::EndTag:
          on_end_tag(t.name);
          break;
        case TokenType::Eof:
          break;
      }
    }
    return std::move(doc_);
  }

 private:
  enum class Mode { BeforeBody, InHead, InBody };

  Node& current() {
    if (mode_ != Mode::InBody) return *head_;
    return stack_.empty() ? *body_ : *stack_.back();
  }

  void start_body() {
    if (mode_ == Mode::InBody) return;
    mode_ = Mode::InBody;
    head_stack_.clear();
  }

  void on_text(std::string data) {
    if (mode_ != Mode::InBody) {
      if (!head_stack_.empty()) {
        append_text(*head_stack_.back(), std::move(data));
        return;
      }
      std::string_view trimmed = text::trim(data);
      if (trimmed.empty()) return;
      std::size_t lead = data.find_first_not_of(" \t\n\r\f");
      data.erase(0, lead);
      start_body();
    }
    append_text(current(), std::move(data));
  }

  void append_text(Node& parent, std::string data) {
    if (data.empty()) return;
    if (!parent.children().empty() && parent.children().back()->kind() == NodeKind::Text) {
      Node& last = *parent.children().back();
      last.set_data(last.data() + data);
      return;
    }
    parent.append_child(doc_.create_text(std::move(data)));
  }

  void merge_attributes(Node& node, const std::vector<Attribute>& attrs) {
    for (const auto& attr : attrs) {
      if (!node.has_attribute(attr.name)) node.set_attribute(attr.name, attr.value);
    }
  }

  void on_start_tag(const Token& t) {
    const std::string& tag = t.name;
    if (tag == "html") {
      merge_attributes(doc_.root(), t.attributes);
      return;
    }
    if (tag == "head") {
      if (mode_ == Mode::BeforeBody) {
        mode_ = Mode::InHead;
        merge_attributes(*head_, t.attributes);
      }
      return;
    }
    if (tag == "body") {
      start_body();
      merge_attributes(*body_, t.attributes);
      return;
    }
    if (mode_ != Mode::InBody && is_head_content(tag) && head_stack_.empty()) {
      Node& el = head_->append_child(make_element(t));
      open_raw_text_if_needed(tag, el, /*in_head=*/true);
      return;
    }
    start_body();
    apply_implied_end_tags(tag);
    if (tag == "form" && in_stack("form")) return;
    if (tag == "a") close_if_open("a");
    open_implied_table_parts(tag);
    Node& el = current().append_child(make_element(t));
    if (is_void_element(tag)) return;
    stack_.push_back(&el);
    open_raw_text_if_needed(tag, el, /*in_head=*/false);
  }

  // Rows live in a row group and cells in a row.
  void open_implied_table_parts(std::string_view tag) {
    if (tag != "tr" && tag != "td" && tag != "th") return;
    if (current().is("table")) push_implied("tbody");
    if (tag != "tr" && (current().is("tbody") || current().is("thead") || current().is("tfoot"))) {
      push_implied("tr");
    }
  }

  void push_implied(std::string_view tag) {
    stack_.push_back(&current().append_child(doc_.create_element(tag)));
  }

  void open_raw_text_if_needed(std::string_view tag, Node& el, bool in_head) {
    if (tag == "script" || tag == "style") {
      tokenizer_.enter_raw_text(tag, false);
    } else if (tag == "textarea" || tag == "title") {
      tokenizer_.enter_raw_text(tag, true);
    } else {
      return;
    }
    // The following text token (if any) belongs to this element; the end tag
    // closes it.
    if (in_head) head_stack_.push_back(&el);
  }

  void apply_implied_end_tags(std::string_view tag) {
    if (closes_paragraph(tag)) close_in_scope("p");
    if (tag == "li") {
      close_in_list_scope("li", {"ul", "ol"});
    } else if (tag == "dd" || tag == "dt") {
      close_in_list_scope("dd", {"dl"});
      close_in_list_scope("dt", {"dl"});
    } else if (tag == "option") {
      if (!stack_.empty() && stack_.back()->is("option")) stack_.pop_back();
    } else if (tag == "optgroup") {
      if (!stack_.empty() && stack_.back()->is("option")) stack_.pop_back();
      if (!stack_.empty() && stack_.back()->is("optgroup")) stack_.pop_back();
    } else if (tag == "tr") {
      close_in_list_scope("td", {"tr", "table"});
      close_in_list_scope("th", {"tr", "table"});
      close_in_list_scope("tr", {"table", "tbody", "thead", "tfoot"});
    } else if (tag == "tbody" || tag == "thead" || tag == "tfoot") {
      close_in_list_scope("td", {"tr", "table"});
      close_in_list_scope("th", {"tr", "table"});
      close_in_list_scope("tr", {"table", "tbody", "thead", "tfoot"});
      for (std::string_view section : {"tbody", "thead", "tfoot"}) close_in_list_scope(section, {"table"});
    } else if (tag == "td" || tag == "th") {
      close_in_list_scope("td", {"tr", "table"});
      close_in_list_scope("th", {"tr", "table"});
    } else if (is_heading(tag)) {
      if (!stack_.empty() && is_heading(stack_.back()->tag())) stack_.pop_back();
    } else if (tag == "button") {
      close_in_scope("button");
    }
  }

  bool in_stack(std::string_view tag) const {
    return std::any_of(stack_.begin(), stack_.end(), [&](Node* n) { return n->is(tag); });
  }

  void close_if_open(std::string_view tag) {
    for (std::size_t i = stack_.size(); i-- > 0;) {
      if (stack_[i]->is(tag)) {
        stack_.resize(i);
        return;
      }
    }
  }

  void close_in_scope(std::string_view tag) {
    for (std::size_t i = stack_.size(); i-- > 0;) {
      if (stack_[i]->is(tag)) {
        stack_.resize(i);
        return;
      }
      if (is_scope_boundary(stack_[i]->tag())) return;
    }
  }

  void close_in_list_scope(std::string_view tag, std::initializer_list<std::string_view> stops) {
    for (std::size_t i = stack_.size(); i-- > 0;) {
      if (stack_[i]->is(tag)) {
        stack_.resize(i);
        return;
      }
      if (one_of(stack_[i]->tag(), stops) || is_scope_boundary(stack_[i]->tag())) return;
    }
  }

  void on_end_tag(const std::string& tag) {
    if (!head_stack_.empty()) {
      if (head_stack_.back()->is(tag)) head_stack_.pop_back();
      return;
    }
    if (tag == "head") {
      if (mode_ == Mode::InHead) mode_ = Mode::BeforeBody;
      return;
    }
    if (tag == "body" || tag == "html") return;
    // Pop up to the matching element; closers with no open match are dropped.
    for (std::size_t i = stack_.size(); i-- > 0;) {
      if (stack_[i]->is(tag)) {
        stack_.resize(i);
        return;
      }
    }
  }

  std::unique_ptr<Node> make_element(const Token& t) {
    auto el = doc_.create_element(t.name);
    for (const auto& attr : t.attributes) el->set_attribute(attr.name, attr.value);
    return el;
  }

  Tokenizer tokenizer_;
  Document doc_;
  Node* head_ = nullptr;
  Node* body_ = nullptr;
  Mode mode_ = Mode::BeforeBody;
  std::vector<Node*> stack_;
  std::vector<Node*> head_stack_;
};

}  // namespace

Document parse_html(std::string_view input) {
  std::string clean = text::sanitize_utf8(input);
  if (clean.size() >= 3 && clean.compare(0, 3, "\xEF\xBB\xBF") == 0) clean.erase(0, 3);
  return TreeBuilder(clean).build();
}

}  // namespace field_sentry::dom
