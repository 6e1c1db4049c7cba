#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stbeta::csv {

/// Splits one CSV record. Double quotes delimit fields that contain commas;
/// "" inside a quoted field is a literal quote. Surrounding whitespace is
/// trimmed from unquoted fields.
std::vector<std::string> split_record(std::string_view line);

std::string trim(std::string_view s);

/// Shortest decimal form that round-trips to the same double; "nan"/"inf"
/// spelled as NA, Inf, -Inf.
std::string format_double(double value);

/// Strict parse of a whole field; throws std::invalid_argument on junk.
double parse_double(std::string_view field);
long long parse_integer(std::string_view field);

/// Quotes a field if it contains a comma or quote.
std::string quote(std::string_view field);

/// Reads a text file into lines, dropping a UTF-8 BOM, trailing CR, empty
/// lines and lines whose first non-blank character is '#'. When given,
/// `line_numbers` receives the 1-based source line of each kept line.
/// Throws std::runtime_error when the file cannot be opened.
std::vector<std::string> read_lines(const std::string& path,
                                    std::vector<std::size_t>* line_numbers = nullptr);

}  // namespace stbeta::csv
