#include "intenreg/affine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace intenreg {

namespace {

struct Moments {
    double total;
    double cr, cc;        // intensity centroid
    double mrr, mrc, mcc; // second central moments
    double rms() const { return std::sqrt(mrr + mcc); }
    double orientation() const { return 0.5 * std::atan2(2.0 * mrc, mrr - mcc); }
};

Moments image_moments(const Image2D& img, const char* which) {
    Moments m{};
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double v = img.at(r, c);
            m.total += v;
            m.cr += v * r;
            m.cc += v * c;
        }
    if (m.total <= 0.0) {
        throw DegenerateInputError(std::string("affine_prealign: ") + which +
                                   " image has zero total intensity");
    }
    m.cr /= m.total;
    m.cc /= m.total;
    for (int r = 0; r < img.height; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double v = img.at(r, c);
            const double dr = r - m.cr;
            const double dc = c - m.cc;
            m.mrr += v * dr * dr;
            m.mrc += v * dr * dc;
            m.mcc += v * dc * dc;
        }
    m.mrr /= m.total;
    m.mrc /= m.total;
    m.mcc /= m.total;
    return m;
}

inline double wrap_half_pi(double a) {
    // Principal axes are defined modulo pi.
    const double pi = std::numbers::pi_v<double>;
    while (a > pi / 2) a -= pi;
    while (a <= -pi / 2) a += pi;
    return a;
}

inline double sample_bilinear(const Image2D& img, double y, double x) {
    const int h = img.height, w = img.width;
    y = std::clamp(y, 0.0, double(h - 1));
    x = std::clamp(x, 0.0, double(w - 1));
    const int y0 = std::min(int(std::floor(y)), h - 1);
    const int x0 = std::min(int(std::floor(x)), w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const int x1 = std::min(x0 + 1, w - 1);
    const double fy = y - y0, fx = x - x0;
    return (1 - fy) * ((1 - fx) * img.at(y0, x0) + fx * img.at(y0, x1)) +
           fy * ((1 - fx) * img.at(y1, x0) + fx * img.at(y1, x1));
}

}  // namespace

AffineParams affine_prealign(const Image2D& target, const Image2D& source) {
    require_same_shape(target, source, "affine_prealign");
    const Moments mt = image_moments(target, "target");
    const Moments ms = image_moments(source, "source");
    if (mt.rms() <= 0.0 || ms.rms() <= 0.0) {
        throw DegenerateInputError("affine_prealign: degenerate point-mass image");
    }

    AffineParams p;
    // Sampling map runs target-grid -> source coordinates, so the scale and
    // rotation are source-relative-to-target.
    p.scale = ms.rms() / mt.rms();
    p.rotation = wrap_half_pi(ms.orientation() - mt.orientation());

    const double m_r = (target.height - 1) / 2.0;
    const double m_c = (target.width - 1) / 2.0;
    const double cosr = std::cos(p.rotation), sinr = std::sin(p.rotation);
    // Pin the map so the target centroid samples the source centroid.
    p.t_row = ms.cr - m_r - p.scale * (cosr * (mt.cr - m_r) - sinr * (mt.cc - m_c));
    p.t_col = ms.cc - m_c - p.scale * (sinr * (mt.cr - m_r) + cosr * (mt.cc - m_c));
    return p;
}

Image2D apply_affine(const Image2D& image, const AffineParams& params) {
    params.validate("apply_affine");
    const int h = image.height, w = image.width;
    const double m_r = (h - 1) / 2.0, m_c = (w - 1) / 2.0;
    const double cosr = std::cos(params.rotation), sinr = std::sin(params.rotation);
    Image2D out(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double dr = r - m_r, dc = c - m_c;
            const double sy = params.scale * (cosr * dr - sinr * dc) + m_r + params.t_row;
            const double sx = params.scale * (sinr * dr + cosr * dc) + m_c + params.t_col;
            out.at(r, c) = sample_bilinear(image, sy, sx);
        }
    }
    return out;
}

SegmentationMap apply_affine_labels(const SegmentationMap& seg, const AffineParams& params) {
    params.validate("apply_affine_labels");
    const int h = seg.height, w = seg.width;
    const double m_r = (h - 1) / 2.0, m_c = (w - 1) / 2.0;
    const double cosr = std::cos(params.rotation), sinr = std::sin(params.rotation);
    SegmentationMap out(h, w);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double dr = r - m_r, dc = c - m_c;
            const double sy =
                std::clamp(params.scale * (cosr * dr - sinr * dc) + m_r + params.t_row,
                           0.0, double(h - 1));
            const double sx =
                std::clamp(params.scale * (sinr * dr + cosr * dc) + m_c + params.t_col,
                           0.0, double(w - 1));
            out.at(r, c) = seg.at(int(std::lround(sy)), int(std::lround(sx)));
        }
    }
    return out;
}

AffineParams affine_invert(const AffineParams& params) {
    params.validate("affine_invert");
    AffineParams inv;
    inv.scale = 1.0 / params.scale;
    inv.rotation = -params.rotation;
    const double cosr = std::cos(inv.rotation), sinr = std::sin(inv.rotation);
    inv.t_row = -inv.scale * (cosr * params.t_row - sinr * params.t_col);
    inv.t_col = -inv.scale * (sinr * params.t_row + cosr * params.t_col);
    return inv;
}

}  // namespace intenreg
