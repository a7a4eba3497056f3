#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vidloc {

// All media time inside the toolkit is integer milliseconds.
using Millis = std::chrono::milliseconds;

// Longest accepted timestamp: 10^9 seconds keeps every sum of slots far from
// int64 overflow.
inline constexpr Millis kMaxTimestamp{1'000'000'000'000LL};

namespace text {

bool is_valid_utf8(std::string_view s);

// Decodes one code point starting at `pos` and advances `pos`. Input must be
// valid UTF-8.
char32_t next_code_point(std::string_view s, std::size_t& pos);

std::size_t code_point_count(std::string_view s);

void append_utf8(std::string& out, char32_t cp);

bool is_space(char32_t cp);

std::string_view trim(std::string_view s);

// ASCII-only lowercase; other bytes pass through untouched.
std::string ascii_lower(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

// Strips a leading UTF-8 byte-order mark.
std::string_view strip_bom(std::string_view s);

// Decimal seconds ("3.2", "12", "0.125") to milliseconds, rounded to the
// nearest millisecond. Returns nullopt on anything else, including negative,
// non-finite and out-of-range values.
std::optional<Millis> parse_seconds(std::string_view s);
std::optional<Millis> seconds_to_millis(double seconds);

// Shortest decimal-seconds rendering of a millisecond count ("3.2", "10").
std::string format_seconds(Millis ms);

double to_seconds(Millis ms);

}  // namespace text
}  // namespace vidloc
