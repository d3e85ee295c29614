#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace abel {

// Shortest text that parses back to the same double.
std::string format_real(double v);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

// Whole-string parses; nullopt on any trailing garbage or overflow.
std::optional<double> parse_real(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);
std::optional<std::uint64_t> parse_uint(std::string_view s);
std::optional<bool> parse_bool(std::string_view s);

}  // namespace abel
