#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace pixelrep {

struct GlyphPoint {
    double x = 0, y = 0;  // font units, y up
    bool on_curve = true;
};

// Quadratic outline in font units; composites already resolved.
struct GlyphOutline {
    std::vector<std::vector<GlyphPoint>> contours;
    bool empty() const { return contours.empty(); }
};

struct HMetrics {
    double advance = 0;  // font units
    double lsb = 0;
};

// Minimal sfnt/TrueType reader: cmap (formats 0/4/6/12), glyf/loca outlines
// with composite resolution, hmtx metrics. No hinting, no shaping tables.
class FontFace {
public:
    static FontFace load(const std::string& path);

    const std::string& path() const { return path_; }
    uint32_t units_per_em() const { return units_per_em_; }
    double ascender() const { return ascender_; }    // font units
    double descender() const { return descender_; }  // font units, negative
    uint16_t glyph_count() const { return num_glyphs_; }

    bool has_codepoint(char32_t cp) const { return glyph_index(cp) != 0; }
    uint16_t glyph_index(char32_t cp) const;
    HMetrics hmetrics(uint16_t gid) const;
    GlyphOutline outline(uint16_t gid) const;

private:
    FontFace() = default;
    void parse();
    void parse_cmap(size_t off, size_t len);
    void append_glyph(GlyphOutline& out, uint16_t gid, const double xform[6], int depth) const;

    std::string path_;
    std::vector<uint8_t> data_;
    size_t glyf_off_ = 0, glyf_len_ = 0;
    size_t loca_off_ = 0, loca_len_ = 0;
    size_t hmtx_off_ = 0, hmtx_len_ = 0;
    size_t cmap_sub_off_ = 0;  // selected cmap subtable
    uint16_t cmap_format_ = 0;
    uint32_t units_per_em_ = 2048;
    double ascender_ = 0, descender_ = 0;
    uint16_t num_glyphs_ = 0;
    uint16_t num_hmetrics_ = 0;
    bool long_loca_ = false;
};

}  // namespace pixelrep
