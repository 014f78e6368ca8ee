#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pathwise::csv {

/// Shortest decimal representation that parses back to the same double.
std::string format(double value);

/// Strict full-field parse; nullopt on trailing garbage or empty input.
std::optional<double> parse(std::string_view field);

/// Split on commas, trimming surrounding blanks and a trailing CR.
std::vector<std::string_view> split(std::string_view line);

}  // namespace pathwise::csv
