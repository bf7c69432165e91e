#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace field_sentry::dom {

enum class NodeKind { Element, Text, Comment };

enum class AuditKind { SelectedSensitive, ReadSensitiveValue };

std::string_view to_string(AuditKind kind);

/// One entry of the sensitive-access log. `selector` is set exactly when
/// `kind == SelectedSensitive`.
struct AuditEvent {
  AuditKind kind;
  int node_id;
  std::optional<std::string> selector;
  std::uint64_t timestamp;

  bool operator==(const AuditEvent&) const = default;
};

struct Attribute {
  std::string name;
  std::string value;

  bool operator==(const Attribute&) const = default;
};

namespace detail {
struct DocumentState;
}

class Selector;
class Document;

/// A node of the page tree. Elements carry serialized attributes and, for
/// input-like elements, a separate live value that is never serialized.
class Node {
 public:
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  NodeKind kind() const { return kind_; }
  bool is_element() const { return kind_ == NodeKind::Element; }
  int id() const { return id_; }

  // Lowercase element name; "#text" / "#comment" for character nodes.
  const std::string& tag() const { return tag_; }
  bool is(std::string_view tag) const { return is_element() && tag_ == tag; }

  const std::vector<Attribute>& attributes() const { return attributes_; }
  // Names are matched case-insensitively.
  std::optional<std::string_view> attribute(std::string_view name) const;
  bool has_attribute(std::string_view name) const;
  bool attribute_equals(std::string_view name, std::string_view value) const;
  void set_attribute(std::string_view name, std::string value);
  bool remove_attribute(std::string_view name);

  // Character data of text and comment nodes.
  const std::string& data() const { return data_; }
  void set_data(std::string data) { data_ = std::move(data); }

  // Concatenated descendant text.
  std::string text_content() const;

  // Raw accessors; reads through read_live_value() are the audited path.
  const std::optional<std::string>& live_value() const { return live_value_; }
  void set_live_value(std::optional<std::string> value) {
    live_value_ = std::move(value);
  }

  bool sensitive_flag() const { return sensitive_flag_; }
  void set_sensitive_flag(bool flag) { sensitive_flag_ = flag; }

  Node* parent() const { return parent_; }
  const std::vector<std::unique_ptr<Node>>& children() const {
    return children_;
  }
  std::vector<Node*> element_children() const;
  std::size_t index_in_parent() const;

  Node& append_child(std::unique_ptr<Node> child);
  Node& insert_child(std::size_t index, std::unique_ptr<Node> child);
  std::unique_ptr<Node> remove_child(const Node& child);

  // Deep copy; node ids are preserved.
  std::unique_ptr<Node> clone() const;

 private:
  friend class Document;
  friend std::optional<std::string> read_live_value(Node& node);
  friend std::vector<Node*> query_select_all(Node& scope,
                                             const Selector& selector);
  friend std::vector<Node*> query_select_all(Document& doc,
                                             const Selector& selector);

  Node(NodeKind kind, std::string tag, int id, detail::DocumentState* state)
      : kind_(kind), tag_(std::move(tag)), id_(id), state_(state) {}

  void adopt(detail::DocumentState* state);

  NodeKind kind_;
  std::string tag_;
  int id_;
  std::vector<Attribute> attributes_;
  std::string data_;
  std::optional<std::string> live_value_;
  bool sensitive_flag_ = false;
  Node* parent_ = nullptr;
  std::vector<std::unique_ptr<Node>> children_;
  detail::DocumentState* state_;
};

/// Owns a tree rooted at an `html` element. Always has head and body.
class Document {
 public:
  Document();
  Document(Document&&) noexcept;
  Document& operator=(Document&&) noexcept;
  ~Document();

  Node& root() { return *root_; }
  const Node& root() const { return *root_; }
  Node* head() const;
  Node* body() const;

  std::unique_ptr<Node> create_element(std::string_view tag);
  std::unique_ptr<Node> create_text(std::string data);
  std::unique_ptr<Node> create_comment(std::string data);

  Node* find_by_id(int id) const;
  std::size_t node_count() const;

  // Deep copy with identical node ids and audit state.
  Document clone() const;

  void enable_access_audit(bool on);
  bool audit_enabled() const;
  const std::vector<AuditEvent>& audit_log() const;

  std::optional<std::string> source_url;
  std::string doctype;

 private:
  friend Document parse_html(std::string_view input);

  std::unique_ptr<detail::DocumentState> state_;
  std::unique_ptr<Node> root_;
};

/// Compiled form of the supported selector subset: type selectors, `#id`,
/// `.class`, `[attr]`, `[attr=value]`, `[attr*=value]`, the descendant
/// combinator and comma groups.
class Selector {
 public:
  // Throws Error(InvalidSelector) for anything outside the grammar.
  static Selector compile(std::string_view source);

  const std::string& source() const { return source_; }
  bool matches(const Node& element) const;

  struct AttributeTest {
    enum class Op { Exists, Equals, Contains };
    std::string name;
    Op op = Op::Exists;
    std::string value;
  };
  struct Compound {
    std::optional<std::string> tag;
    std::vector<std::string> ids;
    std::vector<std::string> classes;
    std::vector<AttributeTest> attributes;
  };
  // Compounds joined by descendant combinators, leftmost first.
  using Complex = std::vector<Compound>;

  const std::vector<Complex>& groups() const { return groups_; }

 private:
  std::string source_;
  std::vector<Complex> groups_;
};

/// Lenient parse; never fails. Invalid UTF-8 is replaced with U+FFFD.
Document parse_html(std::string_view input);

/// Serializes the node and its subtree. Live values are never emitted.
std::string outer_html(const Node& node);
std::string inner_html(const Node& node);

// Start offset of every element tag within a serialization.
struct ElementOffset {
  std::size_t offset;
  const Node* node;
};
std::string outer_html(const Node& node, std::vector<ElementOffset>& offsets);

/// Matching descendants of `scope` in document order. Emits one
/// SelectedSensitive event per sensitive match when auditing is on.
std::vector<Node*> query_select_all(Node& scope, const Selector& selector);
std::vector<Node*> query_select_all(Document& doc, const Selector& selector);
std::vector<Node*> query_select_all(Document& doc, std::string_view selector);

/// The runtime value; emits ReadSensitiveValue for sensitive nodes when
/// auditing is on.
std::optional<std::string> read_live_value(Node& node);

/// Puts `replacement` at the position of `old` and hands back the detached
/// node. Throws Error(TargetNotFound) when `old` is the root or not part of
/// `doc`.
std::unique_ptr<Node> replace_node(Document& doc, Node& old,
                                   std::unique_ptr<Node> replacement);

void enable_access_audit(Document& doc, bool on);

/// input[type=password] or anything flagged by page audit.
bool is_sensitive(const Node& node);
bool is_password_input(const Node& node);

/// Tags, attributes (in order), character data and child order. With
/// `include_runtime_state` live values and sensitive flags are compared too.
bool structurally_equal(const Node& a, const Node& b,
                        bool include_runtime_state = false);

/// Pre-order walk over elements of the subtree, including `node` itself.
void for_each_element(Node& node, const std::function<void(Node&)>& visit);
void for_each_element(const Node& node,
                      const std::function<void(const Node&)>& visit);

std::size_t count_nodes(const Node& node);

bool is_void_element(std::string_view tag);

}  // namespace field_sentry::dom
