#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stnn::csv {

// Shortest decimal representation that parses back to the same double.
std::string format(double v);

std::vector<std::string_view> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view s);

// Strict parsers; throw ParseError with the given line number.
double parse_double(std::string_view cell, std::size_t line);
long long parse_int(std::string_view cell, std::size_t line);

}  // namespace stnn::csv
