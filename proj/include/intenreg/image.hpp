#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "intenreg/errors.hpp"

namespace intenreg {

// Single-channel raster, row-major doubles, nominal range [0,1].
struct Image2D {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image2D() = default;
    Image2D(int h, int w, double fill = 0.0);

    double& at(int r, int c) { return data[std::size_t(r) * width + c]; }
    double at(int r, int c) const { return data[std::size_t(r) * width + c]; }
    std::size_t size() const { return data.size(); }

    bool same_shape(const Image2D& o) const {
        return height == o.height && width == o.width;
    }

    // Checks the type invariants: data length and finiteness.
    void validate(const char* what = "Image2D") const;
};

// Two-channel per-pixel displacement in pixels. The warped output samples
// the source at (r + u_row(r,c), c + u_col(r,c)).
struct DisplacementField {
    int height = 0;
    int width = 0;
    std::vector<double> u_row;
    std::vector<double> u_col;

    DisplacementField() = default;
    DisplacementField(int h, int w, double fill_row = 0.0, double fill_col = 0.0);

    double& row_at(int r, int c) { return u_row[std::size_t(r) * width + c]; }
    double row_at(int r, int c) const { return u_row[std::size_t(r) * width + c]; }
    double& col_at(int r, int c) { return u_col[std::size_t(r) * width + c]; }
    double col_at(int r, int c) const { return u_col[std::size_t(r) * width + c]; }

    bool same_shape(const DisplacementField& o) const {
        return height == o.height && width == o.width;
    }

    void validate(const char* what = "DisplacementField") const;
};

// Integer-labeled raster; label 0 is background.
struct SegmentationMap {
    int height = 0;
    int width = 0;
    std::vector<std::int32_t> labels;

    SegmentationMap() = default;
    SegmentationMap(int h, int w, std::int32_t fill = 0);

    std::int32_t& at(int r, int c) { return labels[std::size_t(r) * width + c]; }
    std::int32_t at(int r, int c) const { return labels[std::size_t(r) * width + c]; }

    bool same_shape(const SegmentationMap& o) const {
        return height == o.height && width == o.width;
    }

    void validate(const char* what = "SegmentationMap") const;
};

// Global similarity transform, expressed as a sampling map: the output grid
// coordinate x is resampled from s * R(rotation) * (x - center) + center + t,
// matching the displacement-field convention (output samples the input).
struct AffineParams {
    double t_row = 0.0;
    double t_col = 0.0;
    double rotation = 0.0;  // radians
    double scale = 1.0;

    void validate(const char* what = "AffineParams") const;
};

void require_same_shape(const Image2D& a, const Image2D& b, const char* op);
void require_same_shape(const Image2D& a, const DisplacementField& b, const char* op);
void require_same_shape(const SegmentationMap& a, const DisplacementField& b, const char* op);
void require_same_shape(const SegmentationMap& a, const SegmentationMap& b, const char* op);

}  // namespace intenreg
