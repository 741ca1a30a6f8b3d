#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pixelrep {

// Decodes UTF-8; malformed bytes come back as U+FFFD one byte at a time.
std::vector<char32_t> utf8_decode(const std::string& s);
std::string utf8_encode(const std::vector<char32_t>& cps);
std::string utf8_encode(char32_t cp);

}  // namespace pixelrep
