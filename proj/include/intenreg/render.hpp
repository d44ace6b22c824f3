#pragma once

#include <string>
#include <vector>

#include "intenreg/evalharness.hpp"

namespace intenreg {

// Minimal self-contained raster plotting: everything (colors, scale bars,
// text) is baked into the PNG so outputs carry no runtime dependencies.

// Sequential map over [0,1]; NaN cells get a magenta sentinel block.
void render_heatmap(const DiceMatrix& m, const std::string& path);

// Diverging map centered at 0 and symmetric about the largest magnitude.
void render_heatmap(const DeltaMatrix& m, const std::string& path);

struct BarRow {
    std::string label;
    double value = 0.0;
};

// Vertical bars with value axis and per-bar labels.
void render_barchart(const std::vector<BarRow>& rows, const std::string& title,
                     const std::string& path);

// 5x7 bitmap text, exposed for the chart tests (pixel probes).
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> rgb;  // 3 bytes per pixel, row-major

    Raster(int w, int h, unsigned char r = 255, unsigned char g = 255,
           unsigned char b = 255);
    void set(int x, int y, unsigned char r, unsigned char g, unsigned char b);
    void fill_rect(int x0, int y0, int w, int h, unsigned char r, unsigned char g,
                   unsigned char b);
};

// Draws `text` (case-insensitive; unsupported characters render as hollow
// boxes) with its top-left corner at (x, y).
void draw_text(Raster& img, int x, int y, const std::string& text, int scale,
               unsigned char r, unsigned char g, unsigned char b);

int text_width(const std::string& text, int scale);

void write_raster_png(const Raster& img, const std::string& path);

}  // namespace intenreg
