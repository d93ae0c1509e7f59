#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace loopsim::cli {

/// Shortest decimal text that parses back to exactly `value`, independent of locale.
std::string format_number(double value);
std::string format_number(std::uint64_t value);

/// Strict parsers: the whole of `text` must be consumed. Return false on failure.
bool parse_number(std::string_view text, double& out);
bool parse_number(std::string_view text, std::uint64_t& out);

std::string_view trim(std::string_view text) noexcept;

}  // namespace loopsim::cli
