#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace charlead {

// Decodes UTF-8 into Unicode scalar values. Malformed bytes decode to U+FFFD,
// one replacement per bad byte, so decoding never fails.
std::u32string decode_utf8(std::string_view bytes);

std::string encode_utf8(char32_t cp);
std::string encode_utf8(const std::u32string& text);

}  // namespace charlead
