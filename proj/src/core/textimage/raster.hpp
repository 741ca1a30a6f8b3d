#pragma once

#include <vector>

#include "core/textimage/truetype.hpp"

namespace pixelrep {

struct GlyphBitmap {
    int width = 0, height = 0;
    int bearing_x = 0;   // px from pen position to the left edge
    int bearing_y = 0;   // px from baseline up to the top edge
    double advance = 0;  // px pen movement
    std::vector<float> coverage;  // row-major width*height, values in [0,1]

    float at(int r, int c) const { return coverage[size_t(r) * size_t(width) + size_t(c)]; }
};

// Scanline fill of the scaled outline, nonzero winding. Antialiased mode uses
// exact horizontal span coverage with 4 vertical subsamples per pixel row
// (box filter); binary mode thresholds a single center sample row at 0.5.
GlyphBitmap rasterize_outline(const GlyphOutline& outline, double scale, bool antialias);

}  // namespace pixelrep
