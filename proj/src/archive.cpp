#include "field_sentry/archive.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>

#include "field_sentry/error.hpp"

namespace field_sentry::archive {
namespace {

constexpr std::uint32_t kLocalHeaderSig = 0x04034b50;
constexpr std::uint32_t kCentralHeaderSig = 0x02014b50;
constexpr std::uint32_t kEndOfCentralSig = 0x06054b50;
// 1980-01-01 00:00:00 in DOS format.
constexpr std::uint16_t kDosTime = 0;
constexpr std::uint16_t kDosDate = (0 << 9) | (1 << 5) | 1;

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedArchive, what);
}

std::uint32_t read_le(std::string_view bytes, std::size_t offset, int width) {
  if (offset + static_cast<std::size_t>(width) > bytes.size()) malformed("truncated field");
  std::uint32_t value = 0;
  for (int i = width - 1; i >= 0; --i) {
    value = (value << 8) | static_cast<unsigned char>(bytes[offset + static_cast<std::size_t>(i)]);
  }
  return value;
}

void put_le(std::string& out, std::uint32_t value, int width) {
  for (int i = 0; i < width; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

std::uint32_t crc_of(std::string_view data) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
}

std::string inflate_raw(std::string_view input, std::size_t expected) {
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) malformed("inflateInit failed");
  std::string out(expected + 1, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(input.data()));
  zs.avail_in = static_cast<uInt>(input.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  std::size_t produced = zs.total_out;
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || produced != expected) malformed("corrupt deflate stream");
  out.resize(expected);
  return out;
}

std::string deflate_raw(std::string_view input) {
  z_stream zs{};
  if (deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, -MAX_WBITS, 8, Z_DEFAULT_STRATEGY) !=
      Z_OK) {
    throw Error(ErrorCode::Io, "deflateInit failed");
  }
  std::string out(deflateBound(&zs, static_cast<uLong>(input.size())), '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(input.data()));
  zs.avail_in = static_cast<uInt>(input.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = deflate(&zs, Z_FINISH);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(ErrorCode::Io, "deflate failed");
  return out;
}

bool unsafe_path(std::string_view path) {
  if (path.empty() || path.front() == '/' || path.find('\\') != std::string_view::npos) {
    return true;
  }
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    auto part = path.substr(start, end == std::string_view::npos ? path.npos : end - start);
    if (part == "..") return true;
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return false;
}

}  // namespace

bool looks_like_zip(std::string_view bytes) {
  return bytes.size() >= 4 && read_le(bytes, 0, 4) == kLocalHeaderSig;
}

bool looks_like_crx(std::string_view bytes) { return bytes.substr(0, 4) == kCrxMagic; }

std::string_view crx_payload(std::string_view bytes) {
  if (!looks_like_crx(bytes)) malformed("missing Cr24 magic");
  if (bytes.size() < 12) malformed("truncated CRX header");
  std::uint32_t version = read_le(bytes, 4, 4);
  if (version != 3) {
    throw Error(ErrorCode::UnsupportedCrxVersion, "CRX version " + std::to_string(version));
  }
  std::uint32_t header_len = read_le(bytes, 8, 4);
  if (12 + static_cast<std::size_t>(header_len) > bytes.size()) malformed("truncated CRX header");
  return bytes.substr(12 + header_len);
}

std::vector<Entry> read_zip(std::string_view bytes) {
  if (bytes.size() < 22) malformed("too short for a ZIP archive");
  std::size_t eocd = std::string_view::npos;
  std::size_t lowest = bytes.size() > 22 + 0xFFFF ? bytes.size() - 22 - 0xFFFF : 0;
  for (std::size_t i = bytes.size() - 22 + 1; i-- > lowest;) {
    if (read_le(bytes, i, 4) == kEndOfCentralSig) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string_view::npos) malformed("no end-of-central-directory record");
  std::uint32_t count = read_le(bytes, eocd + 10, 2);
  std::uint32_t cd_offset = read_le(bytes, eocd + 16, 4);
  if (cd_offset == 0xFFFFFFFF || count == 0xFFFF) malformed("ZIP64 is not supported");

  std::vector<Entry> entries;
  std::size_t cursor = cd_offset;
  for (std::uint32_t n = 0; n < count; ++n) {
    if (read_le(bytes, cursor, 4) != kCentralHeaderSig) malformed("bad central directory");
    std::uint32_t flags = read_le(bytes, cursor + 8, 2);
    std::uint32_t method = read_le(bytes, cursor + 10, 2);
    std::uint32_t crc = read_le(bytes, cursor + 16, 4);
    std::uint32_t comp_size = read_le(bytes, cursor + 20, 4);
    std::uint32_t size = read_le(bytes, cursor + 24, 4);
    std::uint32_t name_len = read_le(bytes, cursor + 28, 2);
    std::uint32_t extra_len = read_le(bytes, cursor + 30, 2);
    std::uint32_t comment_len = read_le(bytes, cursor + 32, 2);
    std::uint32_t local_offset = read_le(bytes, cursor + 42, 4);
    if (cursor + 46 + name_len > bytes.size()) malformed("truncated file name");
    std::string name(bytes.substr(cursor + 46, name_len));
    cursor += 46 + name_len + extra_len + comment_len;

    if (flags & 0x1) malformed("encrypted entry " + name);
    if (!name.empty() && name.back() == '/') continue;
    if (unsafe_path(name)) malformed("unsafe path " + name);

    if (read_le(bytes, local_offset, 4) != kLocalHeaderSig) malformed("bad local header");
    std::uint32_t local_name = read_le(bytes, local_offset + 26, 2);
    std::uint32_t local_extra = read_le(bytes, local_offset + 28, 2);
    std::size_t data_start = local_offset + 30 + local_name + local_extra;
    if (data_start + comp_size > bytes.size()) malformed("truncated data for " + name);
    std::string_view raw = bytes.substr(data_start, comp_size);

    Entry entry;
    entry.path = std::move(name);
    if (method == 0) {
      if (comp_size != size) malformed("stored size mismatch");
      entry.data = std::string(raw);
    } else if (method == 8) {
      entry.data = inflate_raw(raw, size);
    } else {
      malformed("unsupported compression method " + std::to_string(method));
    }
    if (crc_of(entry.data) != crc) malformed("CRC mismatch for " + entry.path);
    entries.push_back(std::move(entry));
  }
  return entries;
}

std::string write_zip(const std::vector<Entry>& entries, bool compress) {
  std::string out;
  std::string central;
  for (const auto& entry : entries) {
    std::string payload = compress ? deflate_raw(entry.data) : entry.data;
    std::uint16_t method = compress ? 8 : 0;
    if (compress && payload.size() >= entry.data.size()) {
      payload = entry.data;
      method = 0;
    }
    std::uint32_t crc = crc_of(entry.data);
    auto offset = static_cast<std::uint32_t>(out.size());
    auto name_len = static_cast<std::uint32_t>(entry.path.size());

    put_le(out, kLocalHeaderSig, 4);
    put_le(out, 20, 2);  // version needed
    put_le(out, 0x0800, 2);  // UTF-8 names
    put_le(out, method, 2);
    put_le(out, kDosTime, 2);
    put_le(out, kDosDate, 2);
    put_le(out, crc, 4);
    put_le(out, static_cast<std::uint32_t>(payload.size()), 4);
    put_le(out, static_cast<std::uint32_t>(entry.data.size()), 4);
    put_le(out, name_len, 2);
    put_le(out, 0, 2);
    out += entry.path;
    out += payload;

    put_le(central, kCentralHeaderSig, 4);
    put_le(central, 20, 2);  // version made by
    put_le(central, 20, 2);
    put_le(central, 0x0800, 2);
    put_le(central, method, 2);
    put_le(central, kDosTime, 2);
    put_le(central, kDosDate, 2);
    put_le(central, crc, 4);
    put_le(central, static_cast<std::uint32_t>(payload.size()), 4);
    put_le(central, static_cast<std::uint32_t>(entry.data.size()), 4);
    put_le(central, name_len, 2);
    put_le(central, 0, 2);  // extra
    put_le(central, 0, 2);  // comment
    put_le(central, 0, 2);  // disk
    put_le(central, 0, 2);  // internal attrs
    put_le(central, 0, 4);  // external attrs
    put_le(central, offset, 4);
    central += entry.path;
  }
  auto cd_offset = static_cast<std::uint32_t>(out.size());
  out += central;
  put_le(out, kEndOfCentralSig, 4);
  put_le(out, 0, 2);
  put_le(out, 0, 2);
  put_le(out, static_cast<std::uint32_t>(entries.size()), 2);
  put_le(out, static_cast<std::uint32_t>(entries.size()), 2);
  put_le(out, static_cast<std::uint32_t>(central.size()), 4);
  put_le(out, cd_offset, 4);
  put_le(out, 0, 2);
  return out;
}

}  // namespace field_sentry::archive
