#include "core/util/utf8.hpp"

namespace pixelrep {

std::vector<char32_t> utf8_decode(const std::string& s) {
    std::vector<char32_t> out;
    size_t i = 0;
    while (i < s.size()) {
        uint8_t b = uint8_t(s[i]);
        char32_t cp = 0xFFFD;
        size_t len = 1;
        if (b < 0x80) {
            cp = b;
        } else if ((b >> 5) == 0x6 && i + 1 < s.size()) {
            cp = char32_t(b & 0x1F) << 6 | (uint8_t(s[i + 1]) & 0x3F);
            len = 2;
            if ((uint8_t(s[i + 1]) >> 6) != 2 || cp < 0x80) cp = 0xFFFD, len = 1;
        } else if ((b >> 4) == 0xE && i + 2 < s.size()) {
            cp = char32_t(b & 0x0F) << 12 | char32_t(uint8_t(s[i + 1]) & 0x3F) << 6 |
                 (uint8_t(s[i + 2]) & 0x3F);
            len = 3;
            if ((uint8_t(s[i + 1]) >> 6) != 2 || (uint8_t(s[i + 2]) >> 6) != 2 || cp < 0x800)
                cp = 0xFFFD, len = 1;
        } else if ((b >> 3) == 0x1E && i + 3 < s.size()) {
            cp = char32_t(b & 0x07) << 18 | char32_t(uint8_t(s[i + 1]) & 0x3F) << 12 |
                 char32_t(uint8_t(s[i + 2]) & 0x3F) << 6 | (uint8_t(s[i + 3]) & 0x3F);
            len = 4;
            if ((uint8_t(s[i + 1]) >> 6) != 2 || (uint8_t(s[i + 2]) >> 6) != 2 ||
                (uint8_t(s[i + 3]) >> 6) != 2 || cp < 0x10000 || cp > 0x10FFFF)
                cp = 0xFFFD, len = 1;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string utf8_encode(char32_t cp) {
    std::string s;
    if (cp < 0x80) {
        s += char(cp);
    } else if (cp < 0x800) {
        s += char(0xC0 | (cp >> 6));
        s += char(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        s += char(0xE0 | (cp >> 12));
        s += char(0x80 | ((cp >> 6) & 0x3F));
        s += char(0x80 | (cp & 0x3F));
    } else {
        s += char(0xF0 | (cp >> 18));
        s += char(0x80 | ((cp >> 12) & 0x3F));
        s += char(0x80 | ((cp >> 6) & 0x3F));
        s += char(0x80 | (cp & 0x3F));
    }
    return s;
}

std::string utf8_encode(const std::vector<char32_t>& cps) {
    std::string s;
    for (char32_t cp : cps) s += utf8_encode(cp);
    return s;
}

}  // namespace pixelrep
