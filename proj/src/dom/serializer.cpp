#include "field_sentry/dom.hpp"

namespace field_sentry::dom {
namespace {

bool is_raw_text_element(std::string_view tag) {
  return tag == "script" || tag == "style";
}

void escape_text(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
}

void escape_attribute(std::string& out, std::string_view s) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
}

void serialize(std::string& out, const Node& node, std::vector<ElementOffset>* offsets);

void serialize_children(std::string& out, const Node& node,
                        std::vector<ElementOffset>* offsets) {
  bool raw = is_raw_text_element(node.tag());
  for (const auto& child : node.children()) {
    if (raw && child->kind() == NodeKind::Text) {
      out += child->data();
    } else {
      serialize(out, *child, offsets);
    }
  }
}

void serialize(std::string& out, const Node& node, std::vector<ElementOffset>* offsets) {
  switch (node.kind()) {
    case NodeKind::Text:
      escape_text(out, node.data());
      return;
    case NodeKind::Comment:
      out += "<!--";
      out += node.data();
      out += "-->";
      return;
    case NodeKind::Element:
      break;
  }
  if (offsets) offsets->push_back(ElementOffset{out.size(), &node});
  out.push_back('<');
  out += node.tag();
  for (const auto& attr : node.attributes()) {
    out.push_back(' ');
    out += attr.name;
    out += "=\"";
    escape_attribute(out, attr.value);
    out.push_back('"');
  }
  out.push_back('>');
  if (is_void_element(node.tag())) return;
  serialize_children(out, node, offsets);
  out += "</";
  out += node.tag();
  out.push_back('>');
}

}  // namespace

std::string outer_html(const Node& node) {
  std::string out;
  serialize(out, node, nullptr);
  return out;
}

std::string outer_html(const Node& node, std::vector<ElementOffset>& offsets) {
  std::string out;
  serialize(out, node, &offsets);
  return out;
}

std::string inner_html(const Node& node) {
  std::string out;
  serialize_children(out, node, nullptr);
  return out;
}

}  // namespace field_sentry::dom
