#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace field_sentry::archive {

struct Entry {
  std::string path;
  std::string data;

  bool operator==(const Entry&) const = default;
};

// Stored and deflated members only; no ZIP64, no encryption. Directory
// entries are skipped. Throws Error(MalformedArchive).
std::vector<Entry> read_zip(std::string_view bytes);

// Deterministic output: fixed timestamps, entries in the given order.
std::string write_zip(const std::vector<Entry>& entries, bool compress = true);

bool looks_like_zip(std::string_view bytes);

inline constexpr std::string_view kCrxMagic = "Cr24";

bool looks_like_crx(std::string_view bytes);

/// Strips the CRX3 header (magic, LE32 version, LE32 header length, header)
/// and returns the embedded ZIP bytes. Throws Error(UnsupportedCrxVersion)
/// for any version other than 3 and Error(MalformedArchive) on truncation.
std::string_view crx_payload(std::string_view bytes);

}  // namespace field_sentry::archive
