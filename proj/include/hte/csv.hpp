#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hte::csv {

// Splits one CSV line, honouring double quotes and trimming blanks.
std::vector<std::string> split_csv_line(const std::string& line);

// Full-string parse of a decimal number; a leading '+' is accepted.
std::optional<double> parse_double(std::string_view text);

// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view text);

}  // namespace hte::csv
