#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace p2emec {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

// Strict parses; throw std::invalid_argument with the offending text.
double parse_double(std::string_view s);
long long parse_int(std::string_view s);
bool parse_bool(std::string_view s);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace p2emec
