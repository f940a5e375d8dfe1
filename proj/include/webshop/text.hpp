#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace webshop {

/// Lowercases, splits on every non-alphanumeric byte and drops empty
/// pieces. Digits are kept as ordinary token characters.
std::vector<std::string> tokenize(std::string_view text);

std::string to_lower(std::string_view text);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool is_numeric_token(std::string_view token);

/// Stable 64-bit FNV-1a hash; used wherever a hash must survive across runs.
std::uint64_t fnv1a(std::string_view text);

}  // namespace webshop
