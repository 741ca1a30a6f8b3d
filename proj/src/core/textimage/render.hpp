#pragma once

#include <string>
#include <vector>

#include "core/textimage/atlas.hpp"

namespace pixelrep {

// Fixed-height grayscale raster of one sentence: 0 = background, 1 = full ink.
struct SentenceImage {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;  // row-major height*width
    std::string text;

    float at(int r, int c) const { return pixels[size_t(r) * size_t(width) + size_t(c)]; }
    float& at(int r, int c) { return pixels[size_t(r) * size_t(width) + size_t(c)]; }
};

SentenceImage render_sentence(const std::string& text, const FontAtlas& atlas,
                              const RenderConfig& cfg);

// width render_sentence would produce, without rasterizing
int measure_width(const std::string& text, const FontAtlas& atlas, const RenderConfig& cfg);

// PXR1 render cache
void write_render_cache(const std::string& path, const std::vector<SentenceImage>& images,
                        int canvas_height);
std::vector<SentenceImage> read_render_cache(const std::string& path);

}  // namespace pixelrep
