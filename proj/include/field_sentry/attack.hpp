#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "field_sentry/dom.hpp"

// Replays the three input-field extraction attacks against an in-memory page.
namespace field_sentry::attack {

enum class AttackKind { SourceExtraction, ValueExtraction, ElementSubstitution };

std::string_view to_string(AttackKind kind);

struct Extraction {
  std::string locator;
  std::string value;

  bool operator==(const Extraction&) const = default;
};

struct AttackResult {
  AttackKind kind = AttackKind::ValueExtraction;
  std::string selector;
  std::vector<Extraction> extracted;
  bool succeeded = false;  // some extracted value equals a typed secret
  bool mutated_document = false;
  // Per-target choice made by run_hybrid, in document order.
  std::vector<AttackKind> target_kinds;
  // Node ids of inserted replacement elements (substitution only).
  std::vector<int> replacement_ids;
};

/// The selector (and optional replacement element) a remote server hands to
/// the replayed extension. Served as one JSON object per line.
struct SelectorDirective {
  std::string selector;
  std::optional<std::string> replacement_tag;
  std::optional<std::string> replacement_type;

  bool has_replacement() const { return replacement_tag.has_value(); }
  bool operator==(const SelectorDirective&) const = default;
};

// Throws Error(InvalidDirective) on malformed JSON, a missing selector, or
// a replacement tag without a type (and vice versa).
SelectorDirective parse_directive(std::string_view json_line);
std::vector<SelectorDirective> parse_directives(std::string_view text);
std::string to_json_line(const SelectorDirective& directive);

inline constexpr std::string_view kMaskChar = "\xE2\x80\xA2";  // U+2022

std::string mask_for(std::string_view typed);

/// Sets the live value. Mirrored fields also get a `value` attribute;
/// protected fields only ever expose a mask of the same length. Typing ""
/// changes nothing. Throws Error(NotAnInput).
void simulate_typing(dom::Document& doc, dom::Node& node, std::string_view typed);

AttackKind choose_attack(dom::Document& doc, dom::Node& node, std::string_view secret);

/// Serializes the body and harvests `value` attributes of password inputs
/// (and inputs flagged sensitive) with a regex. Never mutates `doc`.
AttackResult source_extraction(const dom::Document& doc,
                               std::span<const std::string> secrets = {});

/// Reads the live value of every match. Never mutates `doc`.
AttackResult value_extraction(dom::Document& doc, const dom::Selector& selector,
                              std::span<const std::string> secrets = {});

/// Replaces every match with a plain element built from the directive,
/// keeping all attributes except the protection marker. The typed value is
/// lost; callers retype before extracting. Throws Error(TargetNotFound) and
/// Error(MissingReplacementSpec).
AttackResult element_substitution(dom::Document& doc, const SelectorDirective& directive);

/// The server-driven flow: resolve the selector, pick an attack per match
/// from the element's observable state, dispatch and merge.
AttackResult run_hybrid(dom::Document& doc, const SelectorDirective& directive,
                        std::string_view secret);

}  // namespace field_sentry::attack
