#pragma once

#include <cstdint>
#include <vector>

#include "field_sentry/dom.hpp"

namespace field_sentry::dom::detail {

struct DocumentState {
  int next_id = 1;
  bool audit_enabled = false;
  std::uint64_t clock = 0;
  std::vector<AuditEvent> audit_log;

  void record(AuditKind kind, int node_id, std::optional<std::string> selector) {
    if (!audit_enabled) return;
    audit_log.push_back(AuditEvent{kind, node_id, std::move(selector), ++clock});
  }
};

}  // namespace field_sentry::dom::detail
