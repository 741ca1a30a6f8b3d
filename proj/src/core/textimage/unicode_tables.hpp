#pragma once

#include <cstdint>

namespace pixelrep {

// general category Mn/Mc/Me
bool is_combining_mark(char32_t cp);

// bidirectional class R or AL
bool is_rtl_strong(char32_t cp);

}  // namespace pixelrep
