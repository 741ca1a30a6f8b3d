#include "core/textimage/atlas.hpp"

#include <cmath>

#include "core/util/error.hpp"

namespace pixelrep {

void RenderConfig::validate() const {
    require(canvas_height >= 8, ErrorCode::Config, "canvas_height must be at least 8px");
    require(font_pt > 0 && dpi > 0, ErrorCode::Config, "font_pt and dpi must be positive");
    require(px_size() <= double(canvas_height), ErrorCode::Config, "derived pixel font size ",
            px_size(), " exceeds canvas height ", canvas_height);
    require(pad_left >= 0 && pad_right >= 0, ErrorCode::Config, "negative padding");
    require(baseline() > 0 && baseline() <= canvas_height, ErrorCode::Config,
            "baseline_y outside canvas");
}

FontAtlas FontAtlas::load(const std::vector<std::string>& paths) {
    require(!paths.empty(), ErrorCode::Config, "empty fallback chain");
    std::vector<FontFace> faces;
    faces.reserve(paths.size());
    for (const auto& p : paths) faces.push_back(FontFace::load(p));
    return FontAtlas(std::move(faces));
}

int FontAtlas::resolve_face(char32_t cp) const {
    for (size_t i = 0; i < faces_.size(); ++i) {
        if (faces_[i].has_codepoint(cp)) return int(i);
    }
    return kNoFace;
}

const GlyphBitmap& FontAtlas::glyph(int face, uint16_t gid, double px_size,
                                    bool antialias) const {
    // cache key: face | aa | quantized pixel size (26.6 fixed point) | gid
    uint64_t pxq = uint64_t(std::llround(px_size * 64.0)) & 0xFFFFFF;
    uint64_t key = (uint64_t(uint8_t(face)) << 56) | (uint64_t(antialias) << 48) |
                   (pxq << 16) | gid;
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;

    const FontFace& f = faces_[size_t(face)];
    double scale = px_size / double(f.units_per_em());
    auto bmp = std::make_unique<GlyphBitmap>(rasterize_outline(f.outline(gid), scale, antialias));
    bmp->advance = f.hmetrics(gid).advance * scale;
    auto [pos, inserted] = cache_.emplace(key, std::move(bmp));
    (void)inserted;
    return *pos->second;
}

}  // namespace pixelrep
