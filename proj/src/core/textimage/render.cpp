#include "core/textimage/render.hpp"

#include <algorithm>
#include <cmath>

#include "core/textimage/unicode_tables.hpp"
#include "core/util/error.hpp"
#include "core/util/io.hpp"
#include "core/util/utf8.hpp"

namespace pixelrep {

namespace {

// Weak characters (spaces, digits, ASCII punctuation) do not decide the line
// direction; full bidi classes are out of scope.
bool is_direction_weak(char32_t cp) {
    if (cp == U' ' || cp == U'\t' || cp == 0xA0) return true;
    if (cp >= U'0' && cp <= U'9') return true;
    if (cp < 0x80 && !((cp >= U'A' && cp <= U'Z') || (cp >= U'a' && cp <= U'z'))) return true;
    return is_combining_mark(cp);
}

struct PlacedGlyph {
    int face;
    uint16_t gid;
    double x;  // pen-relative px
};

struct Layout {
    std::vector<PlacedGlyph> glyphs;
    double pen_end = 0;
};

Layout layout_line(const std::string& text, const FontAtlas& atlas, const RenderConfig& cfg) {
    cfg.validate();
    auto cps = utf8_decode(text);
    require(!cps.empty(), ErrorCode::InvalidArgument, "empty input line");

    // grapheme-ish clusters: a base followed by its combining marks
    std::vector<std::vector<char32_t>> clusters;
    for (char32_t cp : cps) {
        if (is_combining_mark(cp) && !clusters.empty())
            clusters.back().push_back(cp);
        else
            clusters.push_back({cp});
    }

    bool rtl = false;
    for (char32_t cp : cps) {
        if (is_rtl_strong(cp)) {
            rtl = true;
            break;
        }
        if (!is_direction_weak(cp)) break;
    }
    if (rtl) std::reverse(clusters.begin(), clusters.end());

    const double px = cfg.px_size();
    Layout out;
    double pen = cfg.pad_left;
    for (const auto& cluster : clusters) {
        char32_t base = cluster[0];
        int face = atlas.resolve_face(base);
        uint16_t gid = 0;
        if (face == kNoFace)
            face = 0;  // first face's .notdef box
        else
            gid = atlas.face(size_t(face)).glyph_index(base);
        double advance = 0;
        if (!is_combining_mark(base)) {
            double scale = px / double(atlas.face(size_t(face)).units_per_em());
            advance = std::max(0.0, atlas.face(size_t(face)).hmetrics(gid).advance * scale);
        }
        out.glyphs.push_back({face, gid, pen});
        for (size_t m = 1; m < cluster.size(); ++m) {
            int mface = atlas.resolve_face(cluster[m]);
            uint16_t mgid = 0;
            if (mface == kNoFace)
                mface = 0;
            else
                mgid = atlas.face(size_t(mface)).glyph_index(cluster[m]);
            // zero-advance mark drawn against the advanced pen; its bearings
            // pull the ink back over the base glyph
            out.glyphs.push_back({mface, mgid, pen + advance});
        }
        pen += advance;
    }
    out.pen_end = pen;
    return out;
}

int final_width(double pen_end, const RenderConfig& cfg) {
    int w = int(std::ceil(pen_end + cfg.pad_right));
    return std::max(w, cfg.canvas_height);
}

}  // namespace

SentenceImage render_sentence(const std::string& text, const FontAtlas& atlas,
                              const RenderConfig& cfg) {
    Layout lay = layout_line(text, atlas, cfg);
    SentenceImage img;
    img.height = cfg.canvas_height;
    img.width = final_width(lay.pen_end, cfg);
    img.pixels.assign(size_t(img.height) * size_t(img.width), 0.0f);
    img.text = text;

    const double px = cfg.px_size();
    const int baseline = cfg.baseline();
    for (const auto& pg : lay.glyphs) {
        const GlyphBitmap& bmp = atlas.glyph(pg.face, pg.gid, px, cfg.antialias);
        if (bmp.width == 0) continue;
        int gx = int(std::lround(pg.x)) + bmp.bearing_x;
        int gy = baseline - bmp.bearing_y;  // top row on the canvas
        for (int r = 0; r < bmp.height; ++r) {
            int cr = gy + r;
            if (cr < 0 || cr >= img.height) continue;
            for (int c = 0; c < bmp.width; ++c) {
                int cc = gx + c;
                if (cc < 0 || cc >= img.width) continue;
                float a = bmp.at(r, c);
                if (a <= 0.0f) continue;
                float& dst = img.at(cr, cc);
                dst = dst + a * (1.0f - dst);
            }
        }
    }
    return img;
}

int measure_width(const std::string& text, const FontAtlas& atlas, const RenderConfig& cfg) {
    return final_width(layout_line(text, atlas, cfg).pen_end, cfg);
}

void write_render_cache(const std::string& path, const std::vector<SentenceImage>& images,
                        int canvas_height) {
    ByteWriter w;
    w.raw("PXR1", 4);
    w.u32(1);
    w.u32(uint32_t(canvas_height));
    w.u64(images.size());
    for (const auto& img : images) {
        require(img.height == canvas_height, ErrorCode::InvalidArgument,
                "image height ", img.height, " does not match cache height ", canvas_height);
        w.u32(uint32_t(img.width));
        for (float v : img.pixels) w.u8(uint8_t(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
    }
    write_binary_file(path, w.bytes.data(), w.bytes.size());
}

std::vector<SentenceImage> read_render_cache(const std::string& path) {
    auto bytes = read_binary_file(path);
    ByteReader r{bytes.data(), bytes.size()};
    char magic[4];
    r.raw(magic, 4);
    require(std::string(magic, 4) == "PXR1", ErrorCode::Io, "bad render cache magic: ", path);
    uint32_t version = r.u32();
    require(version == 1, ErrorCode::Io, "unsupported render cache version ", version);
    int h = int(r.u32());
    uint64_t count = r.u64();
    std::vector<SentenceImage> out;
    out.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        SentenceImage img;
        img.height = h;
        img.width = int(r.u32());
        img.pixels.resize(size_t(h) * size_t(img.width));
        for (auto& v : img.pixels) v = float(r.u8()) / 255.0f;
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace pixelrep
