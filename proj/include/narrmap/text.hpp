#pragma once

// Text utilities shared by the corpus loader and the built-in embedder:
// UTF-8 handling, encoding repair, tokenization, and ISO-8601 timestamps.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace narrmap::text {

bool is_valid_utf8(std::string_view s);

// Decodes UTF-8 into code points. Invalid bytes are decoded as Windows-1252.
std::u32string decode_utf8_lenient(std::string_view s);

std::string encode_utf8(std::u32string_view cps);

// Repairs common encoding damage in a headline:
//  - bytes that are not valid UTF-8 are reinterpreted as Windows-1252;
//  - runs of characters produced by decoding UTF-8 as Windows-1252
//    ("â€™", "Ã©", "Â ") are folded back into the intended characters.
std::string repair_mojibake(std::string_view s);

// Maps Unicode whitespace to ' ', drops control characters, collapses runs and
// trims both ends.
std::string normalize_whitespace(std::string_view s);

// repair_mojibake followed by normalize_whitespace.
std::string clean_headline(std::string_view s);

// Splits on non-alphanumerics, lowercases, and drops tokens of length 1.
std::vector<std::string> tokenize(std::string_view s);

// True when the token contains at least one letter.
bool has_letter(std::string_view token);

// Seconds since 1970-01-01T00:00:00Z.
using UnixSeconds = std::int64_t;

// Accepts YYYY-MM-DD, and YYYY-MM-DD[T| ]HH:MM[:SS[.frac]][Z|+HH:MM|-HH:MM|+HHMM].
// Date-only values normalize to midnight UTC; fractional seconds are truncated.
std::optional<UnixSeconds> parse_iso8601(std::string_view s);

// Formats as YYYY-MM-DDTHH:MM:SSZ.
std::string format_iso8601(UnixSeconds t);

// Formats as YYYY-MM-DD.
std::string format_date(UnixSeconds t);

// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view s);

}  // namespace narrmap::text
