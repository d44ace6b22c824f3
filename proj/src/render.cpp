#include "intenreg/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>

#include "intenreg/image_io.hpp"

namespace intenreg {

namespace {

// 5x7 glyphs, one byte per row, low 5 bits used, MSB on the left.
struct Glyph {
    char ch;
    unsigned char rows[7];
};

constexpr Glyph kFont[] = {
    {'0', {0b01110, 0b10001, 0b10011, 0b10101, 0b11001, 0b10001, 0b01110}},
    {'1', {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'2', {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111}},
    {'3', {0b01110, 0b10001, 0b00001, 0b00110, 0b00001, 0b10001, 0b01110}},
    {'4', {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010}},
    {'5', {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110}},
    {'6', {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110}},
    {'7', {0b11111, 0b00001, 0b00010, 0b00100, 0b00100, 0b00100, 0b00100}},
    {'8', {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110}},
    {'9', {0b01110, 0b10001, 0b10001, 0b01111, 0b00001, 0b00010, 0b01100}},
    {'A', {0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'B', {0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110}},
    {'C', {0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110}},
    {'D', {0b11110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b11110}},
    {'E', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111}},
    {'F', {0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000}},
    {'G', {0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01110}},
    {'H', {0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001}},
    {'I', {0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110}},
    {'J', {0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100}},
    {'K', {0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001}},
    {'L', {0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111}},
    {'M', {0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001}},
    {'N', {0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001, 0b10001}},
    {'O', {0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'P', {0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000}},
    {'Q', {0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101}},
    {'R', {0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001}},
    {'S', {0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110}},
    {'T', {0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100}},
    {'U', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110}},
    {'V', {0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100}},
    {'W', {0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b11011, 0b10001}},
    {'X', {0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001}},
    {'Y', {0b10001, 0b01010, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100}},
    {'Z', {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111}},
    {'.', {0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b01100, 0b01100}},
    {',', {0b00000, 0b00000, 0b00000, 0b00000, 0b00110, 0b00110, 0b01000}},
    {'-', {0b00000, 0b00000, 0b00000, 0b11111, 0b00000, 0b00000, 0b00000}},
    {'+', {0b00000, 0b00100, 0b00100, 0b11111, 0b00100, 0b00100, 0b00000}},
    {'=', {0b00000, 0b00000, 0b11111, 0b00000, 0b11111, 0b00000, 0b00000}},
    {'_', {0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b11111}},
    {'/', {0b00001, 0b00010, 0b00010, 0b00100, 0b01000, 0b01000, 0b10000}},
    {'%', {0b11000, 0b11001, 0b00010, 0b00100, 0b01000, 0b10011, 0b00011}},
    {':', {0b00000, 0b01100, 0b01100, 0b00000, 0b01100, 0b01100, 0b00000}},
    {' ', {0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b00000, 0b00000}},
};

constexpr Glyph kUnknown = {'?', {0b11111, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001,
                                  0b11111}};

const Glyph& find_glyph(char c) {
    const char up = (c >= 'a' && c <= 'z') ? char(c - 'a' + 'A') : c;
    for (const Glyph& g : kFont)
        if (g.ch == up) return g;
    return kUnknown;
}

struct Color {
    unsigned char r, g, b;
};

constexpr Color kNanSentinel{255, 0, 255};

Color lerp(Color a, Color b, double t) {
    t = std::clamp(t, 0.0, 1.0);
    auto mix = [t](unsigned char x, unsigned char y) {
        return (unsigned char)std::lround(x + t * (y - x));
    };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

// Dark navy to warm white.
Color sequential_map(double t) { return lerp({12, 32, 86}, {252, 250, 240}, t); }

// Blue through white to red, |t| <= 1.
Color diverging_map(double t) {
    t = std::clamp(t, -1.0, 1.0);
    if (t < 0) return lerp({255, 255, 255}, {24, 60, 176}, -t);
    return lerp({255, 255, 255}, {186, 28, 34}, t);
}

std::string short_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

void draw_matrix(Raster& img, int x0, int y0, int cell, int n,
                 const std::vector<double>& values,
                 const std::function<Color(double)>& map) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double v = values[std::size_t(i) * n + j];
            const Color c = std::isnan(v) ? kNanSentinel : map(v);
            img.fill_rect(x0 + j * cell, y0 + i * cell, cell, cell, c.r, c.g, c.b);
        }
}

void draw_colorbar(Raster& img, int x0, int y0, int w, int h,
                   const std::function<Color(double)>& map, double lo, double hi) {
    for (int y = 0; y < h; ++y) {
        const double t = 1.0 - double(y) / double(h - 1);
        const Color c = map(lo + t * (hi - lo));
        for (int x = 0; x < w; ++x) img.set(x0 + x, y0 + y, c.r, c.g, c.b);
    }
    draw_text(img, x0 + w + 4, y0 - 3, short_number(hi), 1, 30, 30, 30);
    draw_text(img, x0 + w + 4, y0 + h - 4, short_number(lo), 1, 30, 30, 30);
}

void render_matrix_png(int n, const std::vector<double>& values, const std::string& title,
                       const std::function<Color(double)>& map, double lo, double hi,
                       const std::string& path) {
    const int cell = std::clamp(480 / std::max(n, 1), 4, 40);
    const int grid = cell * n;
    const int margin_top = 24, margin_left = 12, margin_right = 72, margin_bottom = 12;
    Raster img(margin_left + grid + margin_right, margin_top + grid + margin_bottom);

    draw_text(img, margin_left, 8, title, 1, 30, 30, 30);
    draw_matrix(img, margin_left, margin_top, cell, n, values, map);
    draw_colorbar(img, margin_left + grid + 12, margin_top, 14,
                  std::max(grid, 24), map, lo, hi);
    write_raster_png(img, path);
}

}  // namespace

Raster::Raster(int w, int h, unsigned char r, unsigned char g, unsigned char b)
    : width(w), height(h), rgb(std::size_t(w) * h * 3) {
    for (std::size_t i = 0; i < rgb.size(); i += 3) {
        rgb[i] = r;
        rgb[i + 1] = g;
        rgb[i + 2] = b;
    }
}

void Raster::set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = (std::size_t(y) * width + x) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
}

void Raster::fill_rect(int x0, int y0, int w, int h, unsigned char r, unsigned char g,
                       unsigned char b) {
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) set(x, y, r, g, b);
}

void draw_text(Raster& img, int x, int y, const std::string& text, int scale,
               unsigned char r, unsigned char g, unsigned char b) {
    int cx = x;
    for (char ch : text) {
        const Glyph& gl = find_glyph(ch);
        for (int row = 0; row < 7; ++row)
            for (int col = 0; col < 5; ++col)
                if (gl.rows[row] & (1 << (4 - col)))
                    for (int sy = 0; sy < scale; ++sy)
                        for (int sx = 0; sx < scale; ++sx)
                            img.set(cx + col * scale + sx, y + row * scale + sy, r, g, b);
        cx += 6 * scale;  // 5 px glyph + 1 px gap
    }
}

int text_width(const std::string& text, int scale) {
    return text.empty() ? 0 : int(text.size()) * 6 * scale - scale;
}

void write_raster_png(const Raster& img, const std::string& path) {
    write_png_rgb8(path, img.width, img.height, img.rgb);
}

void render_heatmap(const DiceMatrix& m, const std::string& path) {
    render_matrix_png(m.n, m.values, m.model_tag,
                      [](double v) { return sequential_map(v); }, 0.0, 1.0, path);
}

void render_heatmap(const DeltaMatrix& m, const std::string& path) {
    double vmax = 0.0;
    for (double v : m.values)
        if (std::isfinite(v)) vmax = std::max(vmax, std::abs(v));
    if (vmax == 0.0) vmax = 1e-12;  // all-zero delta: uniform midpoint white
    const double scale = vmax;
    render_matrix_png(m.n, m.values, m.minuend_tag + "-" + m.subtrahend_tag,
                      [scale](double v) { return diverging_map(v / scale); }, -vmax, vmax,
                      path);
}

void render_barchart(const std::vector<BarRow>& rows, const std::string& title,
                     const std::string& path) {
    if (rows.empty()) throw ValidationError("render_barchart: no rows");

    const int width = 640, height = 400;
    const int ml = 64, mr = 20, mt = 40, mb = 56;
    const int plot_w = width - ml - mr, plot_h = height - mt - mb;
    Raster img(width, height);

    double lo = 0.0, hi = 0.0;
    for (const auto& r : rows) {
        if (!std::isfinite(r.value)) continue;
        lo = std::min(lo, r.value);
        hi = std::max(hi, r.value);
    }
    if (hi == lo) hi = lo + 1.0;
    const double span = hi - lo;

    draw_text(img, ml, 12, title, 2, 30, 30, 30);

    // Frame and the zero line.
    for (int x = 0; x < plot_w; ++x) img.set(ml + x, mt + plot_h, 90, 90, 90);
    for (int y = 0; y < plot_h; ++y) img.set(ml, mt + y, 90, 90, 90);
    const int zero_y = mt + int(std::lround((hi - 0.0) / span * plot_h));
    if (lo < 0.0 && hi > 0.0)
        for (int x = 0; x < plot_w; ++x) img.set(ml + x, zero_y, 180, 180, 180);

    draw_text(img, 4, mt - 3, short_number(hi), 1, 30, 30, 30);
    draw_text(img, 4, mt + plot_h - 4, short_number(lo), 1, 30, 30, 30);

    const int n = int(rows.size());
    const int slot = plot_w / n;
    const int bar_w = std::max(4, slot * 2 / 3);
    for (int i = 0; i < n; ++i) {
        const double v = rows[std::size_t(i)].value;
        const int x0 = ml + i * slot + (slot - bar_w) / 2;
        if (std::isfinite(v)) {
            const int yv = mt + int(std::lround((hi - v) / span * plot_h));
            const int ybase = lo < 0.0 ? zero_y : mt + plot_h;
            const int top = std::min(yv, ybase), bot = std::max(yv, ybase);
            img.fill_rect(x0, top, bar_w, std::max(1, bot - top), 46, 94, 168);
        } else {
            img.fill_rect(x0, mt, bar_w, plot_h, kNanSentinel.r, kNanSentinel.g,
                          kNanSentinel.b);
        }
        // Per-bar label, clipped to its slot.
        const std::string& lbl = rows[std::size_t(i)].label;
        const int lw = text_width(lbl, 1);
        draw_text(img, ml + i * slot + std::max(0, (slot - lw) / 2), mt + plot_h + 8, lbl,
                  1, 30, 30, 30);
    }
    write_raster_png(img, path);
}

}  // namespace intenreg
