#include "intenreg/warp.hpp"

#include <algorithm>
#include <cmath>

namespace intenreg {

namespace {

struct Tap {
    int y0, y1, x0, x1;
    double fy, fx;
    bool in_y, in_x;  // raw coordinate inside [0, H-1] / [0, W-1]
};

inline Tap make_tap(double yr, double xr, int h, int w) {
    Tap t;
    t.in_y = yr >= 0.0 && yr <= double(h - 1);
    t.in_x = xr >= 0.0 && xr <= double(w - 1);
    const double y = std::clamp(yr, 0.0, double(h - 1));
    const double x = std::clamp(xr, 0.0, double(w - 1));
    t.y0 = std::min(int(std::floor(y)), h - 1);
    t.x0 = std::min(int(std::floor(x)), w - 1);
    t.y1 = std::min(t.y0 + 1, h - 1);
    t.x1 = std::min(t.x0 + 1, w - 1);
    t.fy = y - t.y0;
    t.fx = x - t.x0;
    return t;
}

}  // namespace

Image2D warp(const Image2D& source, const DisplacementField& field) {
    require_same_shape(source, field, "warp");
    const int h = source.height, w = source.width;
    Image2D out(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const Tap t = make_tap(r + field.row_at(r, c), c + field.col_at(r, c), h, w);
            const double s00 = source.at(t.y0, t.x0);
            const double s01 = source.at(t.y0, t.x1);
            const double s10 = source.at(t.y1, t.x0);
            const double s11 = source.at(t.y1, t.x1);
            out.at(r, c) = (1.0 - t.fy) * ((1.0 - t.fx) * s00 + t.fx * s01) +
                           t.fy * ((1.0 - t.fx) * s10 + t.fx * s11);
        }
    }
    return out;
}

DisplacementField warp_backward(const Image2D& source, const DisplacementField& field,
                                const Image2D& upstream) {
    require_same_shape(source, field, "warp_backward");
    require_same_shape(source, upstream, "warp_backward");
    const int h = source.height, w = source.width;
    DisplacementField grad(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double g = upstream.at(r, c);
            const Tap t = make_tap(r + field.row_at(r, c), c + field.col_at(r, c), h, w);
            const double s00 = source.at(t.y0, t.x0);
            const double s01 = source.at(t.y0, t.x1);
            const double s10 = source.at(t.y1, t.x0);
            const double s11 = source.at(t.y1, t.x1);
            // Piecewise-linear spatial gradient of the bilinear surface at
            // the clamped sample point.
            const double dy = (1.0 - t.fx) * (s10 - s00) + t.fx * (s11 - s01);
            const double dx = (1.0 - t.fy) * (s01 - s00) + t.fy * (s11 - s10);
            grad.row_at(r, c) = t.in_y ? g * dy : 0.0;
            grad.col_at(r, c) = t.in_x ? g * dx : 0.0;
        }
    }
    return grad;
}

SegmentationMap warp_labels(const SegmentationMap& seg, const DisplacementField& field) {
    require_same_shape(seg, field, "warp_labels");
    const int h = seg.height, w = seg.width;
    SegmentationMap out(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double y = std::clamp(r + field.row_at(r, c), 0.0, double(h - 1));
            const double x = std::clamp(c + field.col_at(r, c), 0.0, double(w - 1));
            const int yi = int(std::lround(y));
            const int xi = int(std::lround(x));
            out.at(r, c) = seg.at(yi, xi);
        }
    }
    return out;
}

}  // namespace intenreg
