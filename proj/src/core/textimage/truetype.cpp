#include "core/textimage/truetype.hpp"

#include <cstring>

#include "core/util/error.hpp"
#include "core/util/io.hpp"

namespace pixelrep {

namespace {

// big-endian cursor over the font blob
struct Be {
    const uint8_t* p;
    size_t size;
    size_t pos = 0;

    void need(size_t n) const {
        require(pos + n <= size, ErrorCode::Config, "font file truncated");
    }
    uint8_t u8() {
        need(1);
        return p[pos++];
    }
    uint16_t u16() {
        need(2);
        uint16_t v = uint16_t(p[pos] << 8 | p[pos + 1]);
        pos += 2;
        return v;
    }
    int16_t s16() { return int16_t(u16()); }
    uint32_t u32() {
        need(4);
        uint32_t v = uint32_t(p[pos]) << 24 | uint32_t(p[pos + 1]) << 16 |
                     uint32_t(p[pos + 2]) << 8 | uint32_t(p[pos + 3]);
        pos += 4;
        return v;
    }
    void skip(size_t n) {
        need(n);
        pos += n;
    }
};

constexpr uint32_t tag4(const char* s) {
    return uint32_t(uint8_t(s[0])) << 24 | uint32_t(uint8_t(s[1])) << 16 |
           uint32_t(uint8_t(s[2])) << 8 | uint32_t(uint8_t(s[3]));
}

// composite glyph flags
enum : uint16_t {
    ARG_1_AND_2_ARE_WORDS = 0x0001,
    ARGS_ARE_XY_VALUES = 0x0002,
    WE_HAVE_A_SCALE = 0x0008,
    MORE_COMPONENTS = 0x0020,
    WE_HAVE_AN_X_AND_Y_SCALE = 0x0040,
    WE_HAVE_A_TWO_BY_TWO = 0x0080,
};

// simple glyph flags
enum : uint8_t {
    ON_CURVE = 0x01,
    X_SHORT = 0x02,
    Y_SHORT = 0x04,
    REPEAT_FLAG = 0x08,
    X_SAME_OR_POSITIVE = 0x10,
    Y_SAME_OR_POSITIVE = 0x20,
};

}  // namespace

FontFace FontFace::load(const std::string& path) {
    FontFace f;
    f.path_ = path;
    try {
        f.data_ = read_binary_file(path);
    } catch (const Error& e) {
        fail(ErrorCode::Config, "cannot load font '", path, "': ", e.what());
    }
    try {
        f.parse();
    } catch (const Error& e) {
        fail(ErrorCode::Config, "corrupt or unsupported font '", path, "': ", e.what());
    }
    return f;
}

void FontFace::parse() {
    Be s{data_.data(), data_.size()};
    uint32_t scaler = s.u32();
    require(scaler == 0x00010000 || scaler == tag4("true") || scaler == tag4("OTTO"),
            ErrorCode::Config, "not an sfnt font");
    uint16_t num_tables = s.u16();
    s.skip(6);
    size_t head = 0, maxp = 0, hhea = 0, cmap_off = 0, cmap_len = 0;
    for (uint16_t i = 0; i < num_tables; ++i) {
        uint32_t tag = s.u32();
        s.u32();  // checksum
        uint32_t off = s.u32();
        uint32_t len = s.u32();
        require(size_t(off) + len <= data_.size(), ErrorCode::Config, "table out of range");
        switch (tag) {
            case tag4("head"): head = off; break;
            case tag4("maxp"): maxp = off; break;
            case tag4("hhea"): hhea = off; break;
            case tag4("hmtx"): hmtx_off_ = off; hmtx_len_ = len; break;
            case tag4("loca"): loca_off_ = off; loca_len_ = len; break;
            case tag4("glyf"): glyf_off_ = off; glyf_len_ = len; break;
            case tag4("cmap"): cmap_off = off; cmap_len = len; break;
            default: break;
        }
    }
    require(head && maxp && hhea && hmtx_off_ && cmap_off, ErrorCode::Config, "missing table");
    require(glyf_off_ && loca_off_, ErrorCode::Config, "no glyf outlines (CFF not supported)");

    Be h{data_.data(), data_.size(), head};
    h.skip(18);
    units_per_em_ = h.u16();
    require(units_per_em_ >= 16, ErrorCode::Config, "bad unitsPerEm");
    h.skip(30);
    long_loca_ = h.s16() != 0;

    Be m{data_.data(), data_.size(), maxp};
    m.skip(4);
    num_glyphs_ = m.u16();

    Be hh{data_.data(), data_.size(), hhea};
    hh.skip(4);
    ascender_ = hh.s16();
    descender_ = hh.s16();
    hh.skip(24);
    num_hmetrics_ = hh.u16();
    require(num_hmetrics_ > 0, ErrorCode::Config, "no horizontal metrics");

    parse_cmap(cmap_off, cmap_len);
}

void FontFace::parse_cmap(size_t off, size_t len) {
    Be s{data_.data(), data_.size(), off};
    s.u16();
    uint16_t n = s.u16();
    size_t best = 0;
    int best_score = -1;
    for (uint16_t i = 0; i < n; ++i) {
        uint16_t plat = s.u16();
        uint16_t enc = s.u16();
        uint32_t sub = s.u32();
        require(off + sub < off + len, ErrorCode::Config, "cmap subtable out of range");
        Be t{data_.data(), data_.size(), off + sub};
        uint16_t fmt = t.u16();
        int score = -1;
        if (plat == 3 && enc == 10 && fmt == 12) score = 5;
        else if (plat == 0 && fmt == 12) score = 4;
        else if (plat == 3 && enc == 1 && fmt == 4) score = 3;
        else if (plat == 0 && fmt == 4) score = 2;
        else if (fmt == 6 || fmt == 0) score = 1;
        if (score > best_score) {
            best_score = score;
            best = off + sub;
            cmap_format_ = fmt;
        }
    }
    require(best_score >= 0, ErrorCode::Config, "no usable cmap subtable");
    cmap_sub_off_ = best;
}

uint16_t FontFace::glyph_index(char32_t cp) const {
    Be s{data_.data(), data_.size(), cmap_sub_off_};
    switch (cmap_format_) {
        case 0: {
            s.skip(6);
            if (cp > 0xFF) return 0;
            s.skip(cp);
            return s.u8();
        }
        case 4: {
            if (cp > 0xFFFF) return 0;
            s.skip(6);
            uint16_t segx2 = s.u16();
            s.skip(6);
            size_t ends = s.pos;
            size_t starts = ends + segx2 + 2;
            size_t deltas = starts + segx2;
            size_t range_offs = deltas + segx2;
            // binary search over segments
            size_t lo = 0, hi = segx2 / 2;
            while (lo < hi) {
                size_t mid = (lo + hi) / 2;
                Be e{data_.data(), data_.size(), ends + mid * 2};
                if (e.u16() < cp) lo = mid + 1;
                else hi = mid;
            }
            if (lo >= size_t(segx2 / 2)) return 0;
            Be st{data_.data(), data_.size(), starts + lo * 2};
            uint16_t start = st.u16();
            if (cp < start) return 0;
            Be de{data_.data(), data_.size(), deltas + lo * 2};
            int16_t delta = int16_t(de.u16());
            Be ro{data_.data(), data_.size(), range_offs + lo * 2};
            uint16_t range_off = ro.u16();
            if (range_off == 0) return uint16_t((int(cp) + delta) & 0xFFFF);
            size_t gi_pos = range_offs + lo * 2 + range_off + 2 * (cp - start);
            Be gi{data_.data(), data_.size(), gi_pos};
            uint16_t g = gi.u16();
            if (g == 0) return 0;
            return uint16_t((g + delta) & 0xFFFF);
        }
        case 6: {
            s.skip(6);
            uint16_t first = s.u16();
            uint16_t count = s.u16();
            if (cp < first || cp >= char32_t(first + count)) return 0;
            s.skip((cp - first) * 2);
            return s.u16();
        }
        case 12: {
            s.skip(14);
            uint32_t ngroups = s.u32();
            size_t base = s.pos;
            size_t lo = 0, hi = ngroups;
            while (lo < hi) {
                size_t mid = (lo + hi) / 2;
                Be g{data_.data(), data_.size(), base + mid * 12};
                uint32_t gs = g.u32(), ge = g.u32(), gg = g.u32();
                if (cp < gs) hi = mid;
                else if (cp > ge) lo = mid + 1;
                else return uint16_t(gg + (cp - gs));
            }
            return 0;
        }
        default: return 0;
    }
}

HMetrics FontFace::hmetrics(uint16_t gid) const {
    HMetrics hm;
    uint16_t i = gid < num_hmetrics_ ? gid : uint16_t(num_hmetrics_ - 1);
    Be s{data_.data(), data_.size(), hmtx_off_ + size_t(i) * 4};
    hm.advance = s.u16();
    if (gid < num_hmetrics_) {
        hm.lsb = s.s16();
    } else {
        Be l{data_.data(), data_.size(),
             hmtx_off_ + size_t(num_hmetrics_) * 4 + size_t(gid - num_hmetrics_) * 2};
        hm.lsb = l.s16();
    }
    return hm;
}

GlyphOutline FontFace::outline(uint16_t gid) const {
    GlyphOutline out;
    double identity[6] = {1, 0, 0, 1, 0, 0};
    append_glyph(out, gid, identity, 0);
    return out;
}

void FontFace::append_glyph(GlyphOutline& out, uint16_t gid, const double xf[6],
                            int depth) const {
    require(depth < 6, ErrorCode::Config, "composite glyph nesting too deep");
    if (gid >= num_glyphs_) return;
    size_t g0, g1;
    if (long_loca_) {
        Be l{data_.data(), data_.size(), loca_off_ + size_t(gid) * 4};
        g0 = l.u32();
        g1 = l.u32();
    } else {
        Be l{data_.data(), data_.size(), loca_off_ + size_t(gid) * 2};
        g0 = size_t(l.u16()) * 2;
        g1 = size_t(l.u16()) * 2;
    }
    if (g1 <= g0) return;  // empty glyph
    require(g1 <= glyf_len_, ErrorCode::Config, "glyph out of range");
    Be s{data_.data(), data_.size(), glyf_off_ + g0};
    int16_t ncont = s.s16();
    s.skip(8);  // bbox

    if (ncont >= 0) {
        std::vector<uint16_t> ends(static_cast<size_t>(ncont));
        for (auto& e : ends) e = s.u16();
        uint16_t npts = ends.empty() ? 0 : uint16_t(ends.back() + 1);
        uint16_t ilen = s.u16();
        s.skip(ilen);
        std::vector<uint8_t> flags;
        flags.reserve(npts);
        while (flags.size() < npts) {
            uint8_t f = s.u8();
            flags.push_back(f);
            if (f & REPEAT_FLAG) {
                uint8_t rep = s.u8();
                for (uint8_t r = 0; r < rep && flags.size() < npts; ++r) flags.push_back(f);
            }
        }
        std::vector<double> xs(npts), ys(npts);
        double v = 0;
        for (uint16_t i = 0; i < npts; ++i) {
            uint8_t f = flags[i];
            if (f & X_SHORT) {
                uint8_t d = s.u8();
                v += (f & X_SAME_OR_POSITIVE) ? d : -double(d);
            } else if (!(f & X_SAME_OR_POSITIVE)) {
                v += s.s16();
            }
            xs[i] = v;
        }
        v = 0;
        for (uint16_t i = 0; i < npts; ++i) {
            uint8_t f = flags[i];
            if (f & Y_SHORT) {
                uint8_t d = s.u8();
                v += (f & Y_SAME_OR_POSITIVE) ? d : -double(d);
            } else if (!(f & Y_SAME_OR_POSITIVE)) {
                v += s.s16();
            }
            ys[i] = v;
        }
        uint16_t start = 0;
        for (uint16_t c = 0; c < uint16_t(ncont); ++c) {
            uint16_t end = ends[c];
            std::vector<GlyphPoint> contour;
            for (uint16_t i = start; i <= end; ++i) {
                double x = xs[i], y = ys[i];
                contour.push_back({xf[0] * x + xf[2] * y + xf[4],
                                   xf[1] * x + xf[3] * y + xf[5],
                                   (flags[i] & ON_CURVE) != 0});
            }
            if (contour.size() >= 2) out.contours.push_back(std::move(contour));
            start = uint16_t(end + 1);
        }
        return;
    }

    // composite
    uint16_t cflags;
    do {
        cflags = s.u16();
        uint16_t cgid = s.u16();
        double dx = 0, dy = 0;
        if (cflags & ARG_1_AND_2_ARE_WORDS) {
            int16_t a1 = s.s16(), a2 = s.s16();
            if (cflags & ARGS_ARE_XY_VALUES) dx = a1, dy = a2;
        } else {
            int8_t a1 = int8_t(s.u8()), a2 = int8_t(s.u8());
            if (cflags & ARGS_ARE_XY_VALUES) dx = a1, dy = a2;
        }
        double m[4] = {1, 0, 0, 1};
        auto f2d14 = [&]() { return double(s.s16()) / 16384.0; };
        if (cflags & WE_HAVE_A_SCALE) {
            m[0] = m[3] = f2d14();
        } else if (cflags & WE_HAVE_AN_X_AND_Y_SCALE) {
            m[0] = f2d14();
            m[3] = f2d14();
        } else if (cflags & WE_HAVE_A_TWO_BY_TWO) {
            m[0] = f2d14();
            m[1] = f2d14();
            m[2] = f2d14();
            m[3] = f2d14();
        }
        // compose child transform with the parent one
        double child[6] = {
            xf[0] * m[0] + xf[2] * m[1], xf[1] * m[0] + xf[3] * m[1],
            xf[0] * m[2] + xf[2] * m[3], xf[1] * m[2] + xf[3] * m[3],
            xf[0] * dx + xf[2] * dy + xf[4], xf[1] * dx + xf[3] * dy + xf[5]};
        size_t save = s.pos;
        append_glyph(out, cgid, child, depth + 1);
        s.pos = save;
    } while (cflags & MORE_COMPONENTS);
}

}  // namespace pixelrep
