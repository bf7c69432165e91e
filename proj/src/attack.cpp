#include "field_sentry/attack.hpp"

#include <json.hpp>

#include <algorithm>
#include <regex>

#include "field_sentry/error.hpp"
#include "field_sentry/page_audit.hpp"
#include "field_sentry/text.hpp"

namespace field_sentry::attack {

std::string_view to_string(AttackKind kind) {
  switch (kind) {
    case AttackKind::SourceExtraction: return "SourceExtraction";
    case AttackKind::ValueExtraction: return "ValueExtraction";
    case AttackKind::ElementSubstitution: return "ElementSubstitution";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Directives

SelectorDirective parse_directive(std::string_view json_line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidDirective, e.what());
  }
  if (!j.is_object() || !j.contains("selector") || !j["selector"].is_string()) {
    throw Error(ErrorCode::InvalidDirective, "directive needs a string 'selector'");
  }
  SelectorDirective d;
  d.selector = j["selector"].get<std::string>();
  auto optional_string = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw Error(ErrorCode::InvalidDirective, std::string(key));
    return j[key].get<std::string>();
  };
  d.replacement_tag = optional_string("replacement_tag");
  d.replacement_type = optional_string("replacement_type");
  if (d.replacement_tag.has_value() != d.replacement_type.has_value()) {
    throw Error(ErrorCode::InvalidDirective,
                "replacement_tag and replacement_type come together");
  }
  return d;
}

std::vector<SelectorDirective> parse_directives(std::string_view text) {
  std::vector<SelectorDirective> out;
  for (auto line : text::split(text, '\n')) {
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    out.push_back(parse_directive(line));
  }
  return out;
}

std::string to_json_line(const SelectorDirective& directive) {
  nlohmann::ordered_json j;
  j["selector"] = directive.selector;
  if (directive.has_replacement()) {
    j["replacement_tag"] = *directive.replacement_tag;
    j["replacement_type"] = *directive.replacement_type;
  }
  return j.dump();
}

// ---------------------------------------------------------------------------
// Typing model

std::string mask_for(std::string_view typed) {
  std::string out;
  for (std::size_t i = 0, n = text::utf8_length(typed); i < n; ++i) out += kMaskChar;
  return out;
}

void simulate_typing(dom::Document& doc, dom::Node& node, std::string_view typed) {
  if (!node.is("input")) throw Error(ErrorCode::NotAnInput, "<" + node.tag() + ">");
  if (doc.find_by_id(node.id()) != &node) {
    throw Error(ErrorCode::TargetNotFound, "node is not part of the document");
  }
  if (typed.empty()) return;
  if (audit::is_protected_field(node)) {
    node.set_live_value(mask_for(typed));
    return;
  }
  node.set_live_value(std::string(typed));
  if (audit::is_mirrored_field(node)) node.set_attribute("value", std::string(typed));
}

AttackKind choose_attack(dom::Document&, dom::Node& node, std::string_view secret) {
  if (!secret.empty() && dom::outer_html(node).find(secret) != std::string::npos) {
    return AttackKind::SourceExtraction;
  }
  if (dom::read_live_value(node) == secret) return AttackKind::ValueExtraction;
  return AttackKind::ElementSubstitution;
}

// ---------------------------------------------------------------------------
// Attacks

namespace {

bool is_secret(std::string_view value, std::span<const std::string> secrets) {
  return std::find(secrets.begin(), secrets.end(), value) != secrets.end();
}

std::string decode_attribute(std::string_view raw) {
  std::string out;
  for (std::size_t i = 0; i < raw.size();) {
    if (raw.substr(i, 6) == "&quot;") {
      out.push_back('"');
      i += 6;
    } else if (raw.substr(i, 5) == "&amp;") {
      out.push_back('&');
      i += 5;
    } else {
      out.push_back(raw[i++]);
    }
  }
  return out;
}

std::unique_ptr<dom::Node> build_replacement(dom::Document& doc, const dom::Node& old,
                                             const SelectorDirective& directive) {
  auto fresh = doc.create_element(*directive.replacement_tag);
  for (const auto& attr : old.attributes()) {
    if (attr.name == audit::kProtectedAttribute || attr.name == "type") continue;
    fresh->set_attribute(attr.name, attr.value);
  }
  fresh->set_attribute("type", *directive.replacement_type);
  return fresh;
}

}  // namespace

AttackResult source_extraction(const dom::Document& doc, std::span<const std::string> secrets) {
  static const std::regex kInputOpen(R"(<input(?=[\s/>]))", std::regex::icase);
  // One attribute at a time so quoted values never bleed into their neighbours.
  static const std::regex kAttribute(
      R"re(^\s+([^\s"'=<>/]+)(?:\s*=\s*(?:"([^"]*)"|'([^']*)'|([^\s"'=<>`]+)))?)re");
  static const std::regex kTagEnd(R"(^\s*/?>)");

  AttackResult result;
  result.kind = AttackKind::SourceExtraction;
  result.selector = "body";
  const dom::Node* body = doc.body();
  if (!body) return result;

  std::vector<dom::ElementOffset> offsets;
  std::string html = dom::outer_html(*body, offsets);
  auto node_at = [&](std::size_t offset) -> const dom::Node* {
    auto it = std::lower_bound(offsets.begin(), offsets.end(), offset,
                               [](const dom::ElementOffset& e, std::size_t o) { return e.offset < o; });
    return it != offsets.end() && it->offset == offset ? it->node : nullptr;
  };

  for (auto it = std::sregex_iterator(html.begin(), html.end(), kInputOpen);
       it != std::sregex_iterator(); ++it) {
    auto offset = static_cast<std::size_t>(it->position());
    auto pos = html.cbegin() + static_cast<std::ptrdiff_t>(offset + it->length());
    bool password = false;
    std::optional<std::string> value;
    std::smatch attr;
    while (std::regex_search(pos, html.cend(), attr, kAttribute, std::regex_constants::match_continuous)) {
      std::string name = text::to_lower(attr[1].str());
      std::string raw = attr[2].matched ? attr[2].str() : attr[3].matched ? attr[3].str() : attr[4].str();
      if (name == "type" && text::iequals(raw, "password")) password = true;
      if (name == "value" && !value) value = decode_attribute(raw);
      pos = attr[0].second;
    }
    std::smatch end;
    if (!std::regex_search(pos, html.cend(), end, kTagEnd, std::regex_constants::match_continuous)) continue;
    const dom::Node* node = node_at(offset);
    if (!password && !(node && node->sensitive_flag())) continue;
    if (!value || value->empty()) continue;
    std::string locator = node ? audit::locator_for(*node) : "body@" + std::to_string(offset);
    result.extracted.push_back(Extraction{std::move(locator), std::move(*value)});
  }
  result.succeeded = std::any_of(result.extracted.begin(), result.extracted.end(),
                                 [&](const Extraction& e) { return is_secret(e.value, secrets); });
  return result;
}

AttackResult value_extraction(dom::Document& doc, const dom::Selector& selector,
                              std::span<const std::string> secrets) {
  AttackResult result;
  result.kind = AttackKind::ValueExtraction;
  result.selector = selector.source();
  for (dom::Node* node : dom::query_select_all(doc, selector)) {
    auto value = dom::read_live_value(*node);
    if (!value) continue;
    result.extracted.push_back(Extraction{audit::locator_for(*node), std::move(*value)});
  }
  result.succeeded = std::any_of(result.extracted.begin(), result.extracted.end(),
                                 [&](const Extraction& e) { return is_secret(e.value, secrets); });
  return result;
}

AttackResult element_substitution(dom::Document& doc, const SelectorDirective& directive) {
  if (!directive.has_replacement()) {
    throw Error(ErrorCode::MissingReplacementSpec, directive.selector);
  }
  auto selector = dom::Selector::compile(directive.selector);
  auto matches = dom::query_select_all(doc, selector);
  if (matches.empty()) throw Error(ErrorCode::TargetNotFound, directive.selector);

  AttackResult result;
  result.kind = AttackKind::ElementSubstitution;
  result.selector = directive.selector;
  for (dom::Node* old : matches) {
    auto fresh = build_replacement(doc, *old, directive);
    int fresh_id = fresh->id();
    dom::replace_node(doc, *old, std::move(fresh));
    result.replacement_ids.push_back(fresh_id);
    result.target_kinds.push_back(AttackKind::ElementSubstitution);
  }
  result.mutated_document = true;
  return result;
}

AttackResult run_hybrid(dom::Document& doc, const SelectorDirective& directive,
                        std::string_view secret) {
  auto selector = dom::Selector::compile(directive.selector);
  std::vector<int> targets;
  for (dom::Node* node : dom::query_select_all(doc, selector)) targets.push_back(node->id());

  AttackResult merged;
  merged.selector = directive.selector;
  const std::string secret_copy(secret);
  std::span<const std::string> secrets(&secret_copy, 1);
  std::optional<AttackResult> source_pass;

  for (int id : targets) {
    dom::Node* node = doc.find_by_id(id);
    if (!node) continue;
    AttackKind kind = choose_attack(doc, *node, secret);
    merged.target_kinds.push_back(kind);
    switch (kind) {
      case AttackKind::SourceExtraction: {
        if (!source_pass) source_pass = source_extraction(doc, secrets);
        std::string locator = audit::locator_for(*node);
        for (const auto& e : source_pass->extracted) {
          if (e.locator == locator) merged.extracted.push_back(e);
        }
        break;
      }
      case AttackKind::ValueExtraction: {
        if (auto value = dom::read_live_value(*node)) {
          merged.extracted.push_back(Extraction{audit::locator_for(*node), *value});
        }
        break;
      }
      case AttackKind::ElementSubstitution: {
        if (!directive.has_replacement()) {
          throw Error(ErrorCode::MissingReplacementSpec, directive.selector);
        }
        auto fresh = build_replacement(doc, *node, directive);
        dom::Node& inserted = *fresh;
        dom::replace_node(doc, *node, std::move(fresh));
        merged.replacement_ids.push_back(inserted.id());
        merged.mutated_document = true;
        // The old live value died with the old node; capture the retyped one.
        if (inserted.is("input")) simulate_typing(doc, inserted, secret);
        if (auto value = dom::read_live_value(inserted)) {
          merged.extracted.push_back(Extraction{audit::locator_for(inserted), *value});
        }
        break;
      }
    }
  }
  merged.kind = merged.target_kinds.empty() ? AttackKind::ValueExtraction
                                            : merged.target_kinds.front();
  merged.succeeded = std::any_of(merged.extracted.begin(), merged.extracted.end(),
                                 [&](const Extraction& e) { return e.value == secret; });
  return merged;
}

}  // namespace field_sentry::attack
