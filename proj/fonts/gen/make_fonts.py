#!/usr/bin/env python3
"""Regenerates the bundled fonts.

Per-script subsets are cut from DejaVu Sans (see LICENSE-DEJAVU) and renamed
per the Bitstream Vera license terms. The CJK-range coverage font is built
from scratch: each ideograph is a deterministic full-cell grid pattern keyed
by its codepoint, so unseen-script experiments have distinct, renderable
glyphs without shipping a megabyte-scale CJK font.

Usage: python3 make_fonts.py [source.ttf] [outdir]
"""
import sys
import os

from fontTools import subset
from fontTools.ttLib import TTFont
from fontTools.fontBuilder import FontBuilder
from fontTools.pens.ttGlyphPen import TTGlyphPen

SRC = sys.argv[1] if len(sys.argv) > 1 else "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf"
OUT = sys.argv[2] if len(sys.argv) > 2 else os.path.dirname(os.path.abspath(__file__)) + "/.."

SUBSETS = {
    "latin": ["0020-007E", "00A0-017F", "0300-0316", "0323-0328", "2010-2027"],
    "cyrillic": ["0020", "0400-045F", "0490-0491"],
    "greek": ["0020", "0370-03FF"],
    "hebrew": ["0020", "0590-05F4"],
}


def rename(font, family):
    for rec in font["name"].names:
        if rec.nameID in (1, 3, 4, 6, 16):
            rec.string = family if rec.nameID in (1, 16) else family.replace(" ", "")
        if rec.nameID == 2:
            rec.string = "Regular"


def cut_subsets():
    for name, ranges in SUBSETS.items():
        opts = subset.Options()
        opts.layout_features = []          # drop GSUB/GPOS, renderer does not shape
        opts.hinting = False
        opts.name_IDs = [0, 1, 2, 3, 4, 5, 6]
        opts.notdef_outline = True
        opts.unicodes = subset.parse_unicodes(",".join(ranges))
        font = subset.load_font(SRC, opts)
        subsetter = subset.Subsetter(options=opts)
        subsetter.populate(unicodes=opts.unicodes)
        subsetter.subset(font)
        rename(font, "PixelRep " + name.capitalize())
        path = os.path.join(OUT, "pixelrep-%s.ttf" % name)
        font.save(path)
        print(path, os.path.getsize(path), "bytes,", font["maxp"].numGlyphs, "glyphs")


# Full-cell pattern glyphs: a left anchor bar plus a 4x4 bit grid derived from
# the codepoint. The outline spans [-480, 1440] units vertically (em = 1000) so
# rendered ink covers every canvas row at the default layout, the way heavy
# CJK glyphs fill their line box.
CJK_FIRST = 0x4E00
CJK_COUNT = 96
Y_MIN, Y_MAX = -480, 1440
ADV = 1000


def pattern_bits(cp, used):
    h = (cp * 2654435761) & 0xFFFFFFFF
    h ^= h >> 13
    bits = h & 0xFFFF
    while bits in used or bits == 0:
        bits = (bits + 0x1D) & 0xFFFF
    used.add(bits)
    return bits


def draw_glyph(pen, bits):
    def box(x0, y0, x1, y1):
        pen.moveTo((x0, y0))
        pen.lineTo((x0, y1))
        pen.lineTo((x1, y1))
        pen.lineTo((x1, y0))
        pen.closePath()

    box(60, Y_MIN, 180, Y_MAX)  # anchor bar, full cell height
    cell_h = (Y_MAX - Y_MIN - 160) // 4
    for r in range(4):
        for c in range(4):
            if bits >> (r * 4 + c) & 1:
                x0 = 260 + c * 180
                y0 = Y_MIN + 80 + r * cell_h
                box(x0, y0, x0 + 140, y0 + cell_h - 60)


def build_cjk():
    names = [".notdef"] + ["uni%04X" % (CJK_FIRST + i) for i in range(CJK_COUNT)]
    fb = FontBuilder(1000, isTTF=True)
    fb.setupGlyphOrder(names)
    fb.setupCharacterMap({CJK_FIRST + i: names[i + 1] for i in range(CJK_COUNT)})
    glyphs, used = {}, set()
    pen = TTGlyphPen(None)
    pen.moveTo((100, 0)); pen.lineTo((100, 700)); pen.lineTo((500, 700)); pen.lineTo((500, 0)); pen.closePath()
    glyphs[".notdef"] = pen.glyph()
    for i in range(CJK_COUNT):
        pen = TTGlyphPen(None)
        draw_glyph(pen, pattern_bits(CJK_FIRST + i, used))
        glyphs[names[i + 1]] = pen.glyph()
    fb.setupGlyf(glyphs)
    metrics = {n: (ADV if n != ".notdef" else 600, fb.font["glyf"][n].xMin or 0) for n in names}
    fb.setupHorizontalMetrics(metrics)
    fb.setupHorizontalHeader(ascent=800, descent=-200)
    fb.setupNameTable({"familyName": "PixelRep CJK", "styleName": "Regular"})
    fb.setupOS2(sTypoAscender=800, sTypoDescender=-200, usWinAscent=Y_MAX, usWinDescent=-Y_MIN)
    fb.setupPost()
    path = os.path.join(OUT, "pixelrep-cjk.ttf")
    fb.save(path)
    print(path, os.path.getsize(path), "bytes,", CJK_COUNT, "ideograph patterns")


if __name__ == "__main__":
    cut_subsets()
    build_cjk()
