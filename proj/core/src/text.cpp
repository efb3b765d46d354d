#include "tas/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/locid.h>

#include <charconv>
#include <cstdio>
#include <regex>
#include <stdexcept>

namespace tas::text {
namespace {

const icu::Normalizer2& nfc() {
  static const icu::Normalizer2* instance = [] {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) {
      throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return n;
  }();
  return *instance;
}

icu::UnicodeString to_nfc(const icu::UnicodeString& s) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc().normalize(s, status);
  return U_FAILURE(status) ? s : out;
}

bool is_edge_punct(UChar32 c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '"': case '\'':
    case '(': case ')':
    case 0x201C: case 0x201D: case 0x2018: case 0x2019:
      return true;
    default:
      return false;
  }
}

std::vector<UChar32> code_points(const icu::UnicodeString& s) {
  std::vector<UChar32> out;
  out.reserve(static_cast<std::size_t>(s.length()));
  for (int32_t i = 0; i < s.length();) {
    UChar32 c = s.char32At(i);
    out.push_back(c);
    i += U16_LENGTH(c);
  }
  return out;
}

void append_utf8(std::string& out, UChar32 c) {
  icu::UnicodeString one(c);
  one.toUTF8String(out);
}

}  // namespace

std::string normalize(std::string_view value) {
  icu::UnicodeString u =
      icu::UnicodeString::fromUTF8(icu::StringPiece(value.data(), static_cast<int32_t>(value.size())));
  u = to_nfc(u);
  u.toLower(icu::Locale::getRoot());
  u = to_nfc(u);

  // Collapse whitespace runs.
  std::vector<UChar32> collapsed;
  bool in_space = false;
  for (UChar32 c : code_points(u)) {
    if (u_isUWhiteSpace(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !collapsed.empty()) collapsed.push_back(' ');
    in_space = false;
    collapsed.push_back(c);
  }

  std::size_t begin = 0;
  std::size_t end = collapsed.size();
  bool changed = true;
  while (changed && begin < end) {
    changed = false;
    while (begin < end && (collapsed[begin] == ' ' || is_edge_punct(collapsed[begin]))) {
      ++begin;
      changed = true;
    }
    while (end > begin && (collapsed[end - 1] == ' ' || is_edge_punct(collapsed[end - 1]))) {
      --end;
      changed = true;
    }
  }

  std::string out;
  out.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) append_utf8(out, collapsed[i]);
  return out;
}

std::vector<std::string> tokenize(std::string_view value) {
  icu::UnicodeString u =
      icu::UnicodeString::fromUTF8(icu::StringPiece(value.data(), static_cast<int32_t>(value.size())));
  std::vector<std::string> tokens;
  std::string current;
  for (UChar32 c : code_points(u)) {
    if (u_isalnum(c)) {
      append_utf8(current, u_tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

bool contains_token_phrase(std::string_view haystack, std::string_view needle) {
  const auto hay = tokenize(haystack);
  const auto pat = tokenize(needle);
  if (pat.empty() || pat.size() > hay.size()) return false;
  for (std::size_t i = 0; i + pat.size() <= hay.size(); ++i) {
    bool all = true;
    for (std::size_t j = 0; j < pat.size() && all; ++j) all = hay[i + j] == pat[j];
    if (all) return true;
  }
  return false;
}

std::optional<double> parse_decimal(std::string_view value) {
  static const std::regex pattern(R"([+-]?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?)");
  if (!std::regex_match(value.begin(), value.end(), pattern)) return std::nullopt;
  std::string digits;
  for (char c : value) {
    if (c != ',' && c != '+') digits.push_back(c);
  }
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
  return out;
}

std::size_t utf8_length(std::string_view value) noexcept {
  std::size_t n = 0;
  for (unsigned char c : value) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string_view utf8_prefix(std::string_view value, std::size_t max_chars) noexcept {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < value.size(); ++i) {
    const auto c = static_cast<unsigned char>(value[i]);
    if ((c & 0xC0) != 0x80) {
      if (seen == max_chars) return value.substr(0, i);
      ++seen;
    }
  }
  return value;
}

std::string trim(std::string_view value) {
  const auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  std::size_t b = 0;
  std::size_t e = value.size();
  while (b < e && is_ws(value[b])) ++b;
  while (e > b && is_ws(value[e - 1])) --e;
  return std::string(value.substr(b, e - b));
}

std::string fold_case(std::string_view value) {
  icu::UnicodeString u =
      icu::UnicodeString::fromUTF8(icu::StringPiece(value.data(), static_cast<int32_t>(value.size())));
  u.foldCase();
  std::string out;
  u.toUTF8String(out);
  return out;
}

std::uint64_t fnv1a64(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::vector<YearRange> find_year_ranges(std::string_view value) {
  // en dash and em dash spelled as UTF-8 bytes
  static const std::regex re(R"((\d{4})\s*(?:-|\xE2\x80\x93|\xE2\x80\x94|to)\s*(\d{4}))");
  std::vector<YearRange> out;
  const std::string s(value);
  for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const int from = std::stoi(m[1].str());
    const int to = std::stoi(m[2].str());
    if (from > to) continue;
    out.push_back({static_cast<std::size_t>(m.position(0)), static_cast<std::size_t>(m.position(0) + m.length(0)), from, to});
  }
  return out;
}

std::optional<int> parse_year(std::string_view value) {
  if (value.size() != 4) return std::nullopt;
  int year = 0;
  for (char c : value) {
    if (c < '0' || c > '9') return std::nullopt;
    year = year * 10 + (c - '0');
  }
  return year;
}

}  // namespace tas::text
