#include <algorithm>

#include "document_state.hpp"
#include "field_sentry/error.hpp"
#include "field_sentry/text.hpp"

namespace field_sentry::dom {

std::string_view to_string(AuditKind kind) {
  switch (kind) {
    case AuditKind::SelectedSensitive: return "SelectedSensitive";
    case AuditKind::ReadSensitiveValue: return "ReadSensitiveValue";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Node

std::optional<std::string_view> Node::attribute(std::string_view name) const {
  for (const auto& attr : attributes_) {
    if (text::iequals(attr.name, name)) return std::string_view(attr.value);
  }
  return std::nullopt;
}

bool Node::has_attribute(std::string_view name) const {
  return attribute(name).has_value();
}

bool Node::attribute_equals(std::string_view name, std::string_view value) const {
  auto v = attribute(name);
  return v && *v == value;
}

void Node::set_attribute(std::string_view name, std::string value) {
  std::string lowered = text::to_lower(name);
  for (auto& attr : attributes_) {
    if (attr.name == lowered) {
      attr.value = std::move(value);
      return;
    }
  }
  attributes_.push_back(Attribute{std::move(lowered), std::move(value)});
}

bool Node::remove_attribute(std::string_view name) {
  auto it = std::find_if(attributes_.begin(), attributes_.end(),
                         [&](const Attribute& a) { return text::iequals(a.name, name); });
  if (it == attributes_.end()) return false;
  attributes_.erase(it);
  return true;
}

std::string Node::text_content() const {
  if (kind_ == NodeKind::Text) return data_;
  if (kind_ == NodeKind::Comment) return {};
  std::string out;
  for (const auto& child : children_) {
    if (child->kind_ == NodeKind::Text) {
      out += child->data_;
    } else if (child->kind_ == NodeKind::Element) {
      out += child->text_content();
    }
  }
  return out;
}

std::vector<Node*> Node::element_children() const {
  std::vector<Node*> out;
  for (const auto& child : children_) {
    if (child->is_element()) out.push_back(child.get());
  }
  return out;
}

std::size_t Node::index_in_parent() const {
  if (!parent_) return 0;
  const auto& siblings = parent_->children_;
  for (std::size_t i = 0; i < siblings.size(); ++i) {
    if (siblings[i].get() == this) return i;
  }
  return 0;
}

void Node::adopt(detail::DocumentState* state) {
  if (state_ != state) {
    state_ = state;
    id_ = state->next_id++;
  }
  for (auto& child : children_) child->adopt(state);
}

Node& Node::append_child(std::unique_ptr<Node> child) {
  return insert_child(children_.size(), std::move(child));
}

Node& Node::insert_child(std::size_t index, std::unique_ptr<Node> child) {
  if (child->parent_) throw Error(ErrorCode::InvalidArgument, "node already has a parent");
  child->adopt(state_);
  child->parent_ = this;
  index = std::min(index, children_.size());
  auto it = children_.insert(children_.begin() + static_cast<std::ptrdiff_t>(index),
                             std::move(child));
  return **it;
}

std::unique_ptr<Node> Node::remove_child(const Node& child) {
  auto it = std::find_if(children_.begin(), children_.end(),
                         [&](const auto& c) { return c.get() == &child; });
  if (it == children_.end()) throw Error(ErrorCode::TargetNotFound, "not a child");
  std::unique_ptr<Node> detached = std::move(*it);
  children_.erase(it);
  detached->parent_ = nullptr;
  return detached;
}

std::unique_ptr<Node> Node::clone() const {
  std::unique_ptr<Node> copy(new Node(kind_, tag_, id_, state_));
  copy->attributes_ = attributes_;
  copy->data_ = data_;
  copy->live_value_ = live_value_;
  copy->sensitive_flag_ = sensitive_flag_;
  for (const auto& child : children_) {
    auto c = child->clone();
    c->parent_ = copy.get();
    copy->children_.push_back(std::move(c));
  }
  return copy;
}

// ---------------------------------------------------------------------------
// Document

namespace {

void rebind_state(Node& node, detail::DocumentState* state,
                  const std::function<void(Node&, detail::DocumentState*)>& set) {
  set(node, state);
  for (const auto& child : node.children()) rebind_state(*child, state, set);
}

Node* find_by_id_in(const Node& node, int id) {
  if (node.id() == id) return const_cast<Node*>(&node);
  for (const auto& child : node.children()) {
    if (Node* hit = find_by_id_in(*child, id)) return hit;
  }
  return nullptr;
}

}  // namespace

Document::Document() : state_(std::make_unique<detail::DocumentState>()) {
  root_ = create_element("html");
  root_->append_child(create_element("head"));
  root_->append_child(create_element("body"));
}

Document::Document(Document&&) noexcept = default;
Document& Document::operator=(Document&&) noexcept = default;
Document::~Document() = default;

Node* Document::head() const {
  for (Node* child : root_->element_children()) {
    if (child->tag() == "head") return child;
  }
  return nullptr;
}

Node* Document::body() const {
  for (Node* child : root_->element_children()) {
    if (child->tag() == "body") return child;
  }
  return nullptr;
}

std::unique_ptr<Node> Document::create_element(std::string_view tag) {
  return std::unique_ptr<Node>(
      new Node(NodeKind::Element, text::to_lower(tag), state_->next_id++, state_.get()));
}

std::unique_ptr<Node> Document::create_text(std::string data) {
  std::unique_ptr<Node> node(new Node(NodeKind::Text, "#text", state_->next_id++, state_.get()));
  node->data_ = std::move(data);
  return node;
}

std::unique_ptr<Node> Document::create_comment(std::string data) {
  std::unique_ptr<Node> node(
      new Node(NodeKind::Comment, "#comment", state_->next_id++, state_.get()));
  node->data_ = std::move(data);
  return node;
}

Node* Document::find_by_id(int id) const { return find_by_id_in(*root_, id); }

std::size_t Document::node_count() const { return count_nodes(*root_); }

Document Document::clone() const {
  Document copy;
  copy.state_ = std::make_unique<detail::DocumentState>(*state_);
  copy.root_ = root_->clone();
  rebind_state(*copy.root_, copy.state_.get(),
               [](Node& n, detail::DocumentState* s) { n.state_ = s; });
  copy.source_url = source_url;
  copy.doctype = doctype;
  return copy;
}

void Document::enable_access_audit(bool on) { state_->audit_enabled = on; }
bool Document::audit_enabled() const { return state_->audit_enabled; }
const std::vector<AuditEvent>& Document::audit_log() const { return state_->audit_log; }

// ---------------------------------------------------------------------------
// Free operations

bool is_password_input(const Node& node) {
  if (!node.is("input")) return false;
  auto type = node.attribute("type");
  return type && text::iequals(text::trim(*type), "password");
}

bool is_sensitive(const Node& node) {
  return node.is_element() && (node.sensitive_flag() || is_password_input(node));
}

std::optional<std::string> read_live_value(Node& node) {
  if (node.state_ && is_sensitive(node)) {
    node.state_->record(AuditKind::ReadSensitiveValue, node.id(), std::nullopt);
  }
  return node.live_value();
}

std::unique_ptr<Node> replace_node(Document& doc, Node& old, std::unique_ptr<Node> replacement) {
  if (&old == &doc.root() || !old.parent() || doc.find_by_id(old.id()) != &old) {
    throw Error(ErrorCode::TargetNotFound, "node is the root or not part of the document");
  }
  Node* parent = old.parent();
  std::size_t index = old.index_in_parent();
  std::unique_ptr<Node> detached = parent->remove_child(old);
  parent->insert_child(index, std::move(replacement));
  return detached;
}

void enable_access_audit(Document& doc, bool on) { doc.enable_access_audit(on); }

bool structurally_equal(const Node& a, const Node& b, bool include_runtime_state) {
  if (a.kind() != b.kind() || a.tag() != b.tag() || a.data() != b.data() ||
      a.attributes() != b.attributes() || a.children().size() != b.children().size()) {
    return false;
  }
  if (include_runtime_state &&
      (a.live_value() != b.live_value() || a.sensitive_flag() != b.sensitive_flag())) {
    return false;
  }
  for (std::size_t i = 0; i < a.children().size(); ++i) {
    if (!structurally_equal(*a.children()[i], *b.children()[i], include_runtime_state)) {
      return false;
    }
  }
  return true;
}

void for_each_element(Node& node, const std::function<void(Node&)>& visit) {
  if (!node.is_element()) return;
  visit(node);
  for (const auto& child : node.children()) for_each_element(*child, visit);
}

void for_each_element(const Node& node, const std::function<void(const Node&)>& visit) {
  if (!node.is_element()) return;
  visit(node);
  for (const auto& child : node.children()) {
    for_each_element(static_cast<const Node&>(*child), visit);
  }
}

std::size_t count_nodes(const Node& node) {
  std::size_t n = 1;
  for (const auto& child : node.children()) n += count_nodes(*child);
  return n;
}

bool is_void_element(std::string_view tag) {
  static constexpr std::string_view kVoid[] = {"area", "base",  "br",   "col",   "embed",
                                               "hr",   "img",   "input", "link", "meta",
                                               "param", "source", "track", "wbr"};
  return std::find(std::begin(kVoid), std::end(kVoid), tag) != std::end(kVoid);
}

}  // namespace field_sentry::dom
