#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace doceval::utf8 {

// Offset of the first byte that does not start a well-formed UTF-8 sequence,
// or nullopt when the whole input is valid.
std::optional<std::size_t> first_invalid(std::string_view s) noexcept;

// Decodes valid UTF-8 into code points. Invalid bytes decode as U+FFFD.
std::vector<char32_t> decode(std::string_view s);

void append(std::string& out, char32_t cp);

}  // namespace doceval::utf8
