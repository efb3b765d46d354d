#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Text primitives shared by the store, the search fixture and the scorer.
namespace tas::text {

// Canonical matching form: NFC, lowercase, trimmed, internal whitespace runs
// collapsed to one space, leading/trailing .,;:"'() and curly quotes removed.
// Idempotent.
std::string normalize(std::string_view value);

// Lowercase alphanumeric tokens (Unicode-aware) in order of appearance.
std::vector<std::string> tokenize(std::string_view value);

// True iff the tokens of `needle` occur as a contiguous run inside the tokens
// of `haystack`. An untokenizable needle never matches.
bool contains_token_phrase(std::string_view haystack, std::string_view needle);

// Decimal literal with optional sign, optional thousands commas and optional
// fraction ("1,000", "-3.5"). Anything else yields nullopt.
std::optional<double> parse_decimal(std::string_view value);

std::size_t utf8_length(std::string_view value) noexcept;

// Longest prefix holding at most `max_chars` code points.
std::string_view utf8_prefix(std::string_view value, std::size_t max_chars) noexcept;

std::string trim(std::string_view value);

// Unicode simple case folding, for case-insensitive identifiers.
std::string fold_case(std::string_view value);

struct YearRange {
  std::size_t begin = 0;  // byte offsets of the whole match
  std::size_t end = 0;
  int from = 0;
  int to = 0;
};

// "2005-2015", "2005–2015" or "2005 to 2015", in order of appearance.
std::vector<YearRange> find_year_ranges(std::string_view value);

// Exactly four ASCII digits.
std::optional<int> parse_year(std::string_view value);

std::uint64_t fnv1a64(std::string_view data) noexcept;
std::string hex64(std::uint64_t value);

}  // namespace tas::text
