#include "core/textimage/raster.hpp"

#include <algorithm>
#include <cmath>

namespace pixelrep {

namespace {

struct Edge {
    double x0, y0, x1, y1;  // px, y up
};

void add_edge(std::vector<Edge>& edges, double x0, double y0, double x1, double y1) {
    if (y0 != y1) edges.push_back({x0, y0, x1, y1});
}

void add_quad(std::vector<Edge>& edges, double x0, double y0, double cx, double cy,
              double x1, double y1) {
    double d = std::hypot(x0 - 2 * cx + x1, y0 - 2 * cy + y1);
    int n = std::clamp(int(std::ceil(std::sqrt(d * 4.0))), 1, 24);
    double px = x0, py = y0;
    for (int i = 1; i <= n; ++i) {
        double t = double(i) / n;
        double u = 1.0 - t;
        double qx = u * u * x0 + 2 * u * t * cx + t * t * x1;
        double qy = u * u * y0 + 2 * u * t * cy + t * t * y1;
        add_edge(edges, px, py, qx, qy);
        px = qx;
        py = qy;
    }
}

// TrueType contours store quadratics with implied on-curve midpoints between
// consecutive off-curve points.
void flatten_contour(std::vector<Edge>& edges, const std::vector<GlyphPoint>& pts,
                     double scale) {
    size_t n = pts.size();
    if (n < 2) return;
    auto px = [&](size_t i) { return pts[i].x * scale; };
    auto py = [&](size_t i) { return pts[i].y * scale; };

    // find a starting on-curve point (synthesize one if all are off-curve)
    size_t start = n;
    for (size_t i = 0; i < n; ++i) {
        if (pts[i].on_curve) {
            start = i;
            break;
        }
    }
    double sx, sy;
    if (start == n) {
        sx = (px(0) + px(n - 1)) / 2;
        sy = (py(0) + py(n - 1)) / 2;
        start = 0;
    } else {
        sx = px(start);
        sy = py(start);
    }

    double curx = sx, cury = sy;
    bool have_ctrl = false;
    double ctrlx = 0, ctrly = 0;
    for (size_t k = 1; k <= n; ++k) {
        size_t i = (start + k) % n;
        double x = px(i), y = py(i);
        if (pts[i].on_curve) {
            if (have_ctrl) {
                add_quad(edges, curx, cury, ctrlx, ctrly, x, y);
                have_ctrl = false;
            } else {
                add_edge(edges, curx, cury, x, y);
            }
            curx = x;
            cury = y;
        } else {
            if (have_ctrl) {
                double mx = (ctrlx + x) / 2, my = (ctrly + y) / 2;
                add_quad(edges, curx, cury, ctrlx, ctrly, mx, my);
                curx = mx;
                cury = my;
            }
            ctrlx = x;
            ctrly = y;
            have_ctrl = true;
        }
    }
    if (have_ctrl) {
        add_quad(edges, curx, cury, ctrlx, ctrly, sx, sy);
    } else if (curx != sx || cury != sy) {
        add_edge(edges, curx, cury, sx, sy);
    }
}

struct Crossing {
    double x;
    int dir;
};

}  // namespace

GlyphBitmap rasterize_outline(const GlyphOutline& outline, double scale, bool antialias) {
    GlyphBitmap bmp;
    std::vector<Edge> edges;
    for (const auto& c : outline.contours) flatten_contour(edges, c, scale);
    if (edges.empty()) return bmp;

    double xmin = edges[0].x0, xmax = xmin, ymin = edges[0].y0, ymax = ymin;
    for (const auto& e : edges) {
        xmin = std::min({xmin, e.x0, e.x1});
        xmax = std::max({xmax, e.x0, e.x1});
        ymin = std::min({ymin, e.y0, e.y1});
        ymax = std::max({ymax, e.y0, e.y1});
    }
    int x0 = int(std::floor(xmin)), x1 = int(std::ceil(xmax));
    int y0 = int(std::floor(ymin)), y1 = int(std::ceil(ymax));
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;
    bmp.width = x1 - x0;
    bmp.height = y1 - y0;
    bmp.bearing_x = x0;
    bmp.bearing_y = y1;
    bmp.coverage.assign(size_t(bmp.width) * size_t(bmp.height), 0.0f);

    const int subs = antialias ? 4 : 1;
    std::vector<Crossing> xs;
    for (int r = 0; r < bmp.height; ++r) {
        for (int s = 0; s < subs; ++s) {
            double ys = double(y1) - r - (s + 0.5) / subs;
            xs.clear();
            for (const auto& e : edges) {
                double lo = std::min(e.y0, e.y1), hi = std::max(e.y0, e.y1);
                if (ys < lo || ys >= hi) continue;  // half-open: count bottom, skip top
                double t = (ys - e.y0) / (e.y1 - e.y0);
                xs.push_back({e.x0 + t * (e.x1 - e.x0), e.y1 > e.y0 ? 1 : -1});
            }
            if (xs.empty()) continue;
            std::sort(xs.begin(), xs.end(),
                      [](const Crossing& a, const Crossing& b) { return a.x < b.x; });
            int winding = 0;
            double span_start = 0;
            for (const auto& c : xs) {
                if (winding == 0 && c.dir != 0) span_start = c.x;
                int prev = winding;
                winding += c.dir;
                if (prev != 0 && winding == 0) {
                    // accumulate exact horizontal coverage of [span_start, c.x]
                    double a = span_start - x0, b = c.x - x0;
                    int ca = std::max(0, int(std::floor(a)));
                    int cb = std::min(bmp.width - 1, int(std::ceil(b)) - 1);
                    for (int col = ca; col <= cb; ++col) {
                        double ov = std::min(b, double(col + 1)) - std::max(a, double(col));
                        if (ov > 0)
                            bmp.coverage[size_t(r) * size_t(bmp.width) + size_t(col)] +=
                                float(ov / subs);
                    }
                }
            }
        }
    }
    for (auto& v : bmp.coverage) {
        v = std::min(v, 1.0f);
        if (!antialias) v = v >= 0.5f ? 1.0f : 0.0f;
    }
    return bmp;
}

}  // namespace pixelrep
