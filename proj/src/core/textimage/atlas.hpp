#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/textimage/raster.hpp"
#include "core/textimage/truetype.hpp"

namespace pixelrep {

struct RenderConfig {
    int canvas_height = 32;
    double font_pt = 10.0;
    double dpi = 120.0;
    int baseline_y = 0;  // 0 derives canvas_height minus a 25% descender budget
    int pad_left = 2;
    int pad_right = 2;
    bool antialias = true;

    double px_size() const { return font_pt * dpi / 72.0; }
    int baseline() const {
        return baseline_y > 0 ? baseline_y : canvas_height - (canvas_height + 2) / 4;
    }
    void validate() const;
};

constexpr int kNoFace = -1;

// Ordered fallback chain of font faces with a synchronized glyph-bitmap cache.
class FontAtlas {
public:
    static FontAtlas load(const std::vector<std::string>& paths);

    size_t face_count() const { return faces_.size(); }
    const FontFace& face(size_t i) const { return faces_[i]; }

    // lowest face index whose character map covers cp, kNoFace otherwise
    int resolve_face(char32_t cp) const;

    const GlyphBitmap& glyph(int face, uint16_t gid, double px_size, bool antialias) const;

private:
    explicit FontAtlas(std::vector<FontFace> faces) : faces_(std::move(faces)) {}

    std::vector<FontFace> faces_;
    mutable std::mutex mu_;
    mutable std::unordered_map<uint64_t, std::unique_ptr<GlyphBitmap>> cache_;
};

}  // namespace pixelrep
