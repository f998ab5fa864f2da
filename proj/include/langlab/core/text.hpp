#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace langlab {

/// Splits on a single delimiter; keeps empty fields.
std::vector<std::string> split(std::string_view s, char delim);

/// Splits on runs of spaces; drops empty tokens.
std::vector<std::string> split_ws(std::string_view s);

/// One string per UTF-8 code point. Invalid continuation bytes are kept as
/// single-byte symbols rather than rejected; corpora are opaque symbol streams.
std::vector<std::string> utf8_chars(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Shortest decimal form that round-trips an IEEE double (17 significant digits).
std::string format_g17(double v);

/// Strict double parse of a whole token.
double parse_double(const std::string& token, const std::string& context);

/// Strict non-negative integer parse of a whole token.
long long parse_int(const std::string& token, const std::string& context);

std::vector<std::string> read_lines(const std::string& path);

/// Writes via a temp file in the same directory, then renames. Readers never
/// observe a partially written file under the final name.
void write_file_atomic(const std::string& path, const std::string& content);

bool is_comment_or_blank(std::string_view line);

}  // namespace langlab
