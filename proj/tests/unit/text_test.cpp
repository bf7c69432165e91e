#include <gtest/gtest.h>

#include <random>
#include <unordered_set>

#include "field_sentry/text.hpp"

using namespace field_sentry;

namespace {

std::string encode(char32_t cp) {
  std::string s;
  if (cp < 0x80) {
    s += static_cast<char>(cp);
  } else if (cp < 0x800) {
    s += static_cast<char>(0xC0 | (cp >> 6));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    s += static_cast<char>(0xE0 | (cp >> 12));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    s += static_cast<char>(0xF0 | (cp >> 18));
    s += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    s += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return s;
}

// Every well-formed sequence, by enumeration of scalar values.
const std::unordered_set<std::string>& all_sequences() {
  static const auto set = [] {
    std::unordered_set<std::string> s;
    for (char32_t cp = 0; cp <= 0x10FFFF; ++cp) {
      if (cp >= 0xD800 && cp <= 0xDFFF) continue;
      s.insert(encode(cp));
    }
    return s;
  }();
  return set;
}

// Segments into (sequence or single bad byte).
std::vector<std::pair<std::string, bool>> segments(const std::string& bytes) {
  std::vector<std::pair<std::string, bool>> out;
  std::size_t i = 0;
  while (i < bytes.size()) {
    std::size_t len = 0;
    for (std::size_t n = 1; n <= 4 && i + n <= bytes.size(); ++n) {
      if (all_sequences().count(bytes.substr(i, n))) len = n;
    }
    if (len) {
      out.push_back({bytes.substr(i, len), true});
      i += len;
    } else {
      out.push_back({bytes.substr(i, 1), false});
      ++i;
    }
  }
  return out;
}

std::string random_bytes(std::mt19937_64& rng) {
  static const unsigned char interesting[] = {0x00, 0x41, 0x7F, 0x80, 0xBF, 0xC0, 0xC1, 0xC2, 0xDF, 0xE0,
                                              0xED, 0xEF, 0xF0, 0xF4, 0xF5, 0xFF, 0xA0, 0x9F, 0x8F, 0x90};
  std::string s;
  for (int n = rng() % 10; n > 0; --n) {
    switch (rng() % 3) {
      case 0: s += static_cast<char>(interesting[rng() % sizeof interesting]); break;
      case 1: s += encode(static_cast<char32_t>(rng() % 0x110000)); break;
      default: s += static_cast<char>(rng() % 256);
    }
  }
  return s;
}

}  // namespace

TEST(Text, AsciiHelpers) {
  EXPECT_EQ(text::to_lower("PassWORD-Ünï"), "password-Ünï");
  EXPECT_TRUE(text::iequals("Input", "iNPUT"));
  EXPECT_FALSE(text::iequals("input", "inputs"));
  EXPECT_TRUE(text::icontains("querySelectorAll", "SELECTOR"));
  EXPECT_TRUE(text::icontains("x", ""));
  EXPECT_FALSE(text::icontains("", "x"));
  EXPECT_TRUE(text::starts_with_icase("HTTPS://x", "https:"));
  EXPECT_EQ(text::trim(" \t\r\n a b \f"), "a b");
  EXPECT_EQ(text::trim("   "), "");
  EXPECT_EQ(text::collapse_whitespace("  Sign \n\t In  "), "Sign In");
}

TEST(Text, Split) {
  EXPECT_EQ(text::split("a,,b,", ','), (std::vector<std::string_view>{"a", "", "b", ""}));
  EXPECT_EQ(text::split("", ','), (std::vector<std::string_view>{""}));
  EXPECT_EQ(text::split_whitespace("  a \t b\nc "), (std::vector<std::string_view>{"a", "b", "c"}));
  EXPECT_TRUE(text::split_whitespace(" \n ").empty());
}

TEST(Utf8, AgreesWithEnumeratedSequences) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 20000; ++i) {
    std::string s = random_bytes(rng);
    auto segs = segments(s);
    std::string want;
    bool valid = true;
    for (const auto& [bytes, ok] : segs) {
      want += ok ? bytes : "\xEF\xBF\xBD";
      valid = valid && ok;
    }
    ASSERT_EQ(text::is_valid_utf8(s), valid);
    ASSERT_EQ(text::sanitize_utf8(s), want);
    ASSERT_EQ(text::utf8_length(s), segs.size());
    ASSERT_TRUE(text::is_valid_utf8(text::sanitize_utf8(s)));
    if (valid) {
      std::size_t boundary = 0;
      std::vector<bool> is_boundary(s.size() + 1, false);
      for (const auto& seg : segs) {
        is_boundary[boundary] = true;
        boundary += seg.first.size();
      }
      is_boundary[s.size()] = true;
      for (std::size_t p = 0; p <= s.size(); ++p) {
        std::size_t f = text::utf8_floor(s, p);
        ASSERT_TRUE(is_boundary[f]);
        ASSERT_LE(f, p);
        for (std::size_t q = f + 1; q <= p; ++q) ASSERT_FALSE(is_boundary[q]);
      }
    }
  }
}

TEST(Utf8, AppendMatchesEncoder) {
  for (char32_t cp : {0x0u, 0x41u, 0x7Fu, 0x80u, 0x7FFu, 0x800u, 0xFFFDu, 0xFFFFu, 0x10000u, 0x10FFFFu}) {
    std::string out;
    text::append_utf8(out, cp);
    EXPECT_EQ(out, encode(cp)) << static_cast<std::uint32_t>(cp);
  }
}

TEST(Utf8, KnownIllFormed) {
  EXPECT_FALSE(text::is_valid_utf8("\xC0\xAF"));          // overlong
  EXPECT_FALSE(text::is_valid_utf8("\xED\xA0\x80"));      // surrogate
  EXPECT_FALSE(text::is_valid_utf8("\xF4\x90\x80\x80"));  // above U+10FFFF
  EXPECT_EQ(text::sanitize_utf8("a\xE2\x82"), "a\xEF\xBF\xBD\xEF\xBF\xBD");
  EXPECT_EQ(text::utf8_length("\xE2\x82\xAC\xFF"), 2u);
}
