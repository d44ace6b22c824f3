#include "intenreg/image.hpp"

#include <cmath>
#include <string>

namespace intenreg {

namespace {

void check_dims(int h, int w, const char* what) {
    if (h <= 0 || w <= 0) {
        throw DimensionError(std::string(what) + ": non-positive shape " +
                             std::to_string(h) + "x" + std::to_string(w));
    }
}

std::string shape_str(int h, int w) {
    return std::to_string(h) + "x" + std::to_string(w);
}

}  // namespace

Image2D::Image2D(int h, int w, double fill) : height(h), width(w) {
    check_dims(h, w, "Image2D");
    data.assign(std::size_t(h) * w, fill);
}

void Image2D::validate(const char* what) const {
    check_dims(height, width, what);
    if (data.size() != std::size_t(height) * width) {
        throw ValidationError(std::string(what) + ": data length " +
                              std::to_string(data.size()) + " != " +
                              shape_str(height, width));
    }
    for (double v : data) {
        if (!std::isfinite(v)) {
            throw ValidationError(std::string(what) + ": non-finite value");
        }
    }
}

DisplacementField::DisplacementField(int h, int w, double fill_row, double fill_col)
    : height(h), width(w) {
    check_dims(h, w, "DisplacementField");
    u_row.assign(std::size_t(h) * w, fill_row);
    u_col.assign(std::size_t(h) * w, fill_col);
}

void DisplacementField::validate(const char* what) const {
    check_dims(height, width, what);
    const std::size_t n = std::size_t(height) * width;
    if (u_row.size() != n || u_col.size() != n) {
        throw ValidationError(std::string(what) + ": channel length mismatch");
    }
    for (double v : u_row) {
        if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite u_row");
    }
    for (double v : u_col) {
        if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite u_col");
    }
}

SegmentationMap::SegmentationMap(int h, int w, std::int32_t fill) : height(h), width(w) {
    check_dims(h, w, "SegmentationMap");
    labels.assign(std::size_t(h) * w, fill);
}

void SegmentationMap::validate(const char* what) const {
    check_dims(height, width, what);
    if (labels.size() != std::size_t(height) * width) {
        throw ValidationError(std::string(what) + ": labels length mismatch");
    }
    for (std::int32_t v : labels) {
        if (v < 0) throw ValidationError(std::string(what) + ": negative label id");
    }
}

void AffineParams::validate(const char* what) const {
    if (!std::isfinite(t_row) || !std::isfinite(t_col) || !std::isfinite(rotation) ||
        !std::isfinite(scale)) {
        throw ValidationError(std::string(what) + ": non-finite parameter");
    }
    if (scale <= 0.0) {
        throw ValidationError(std::string(what) + ": scale must be > 0, got " +
                              std::to_string(scale));
    }
}

void require_same_shape(const Image2D& a, const Image2D& b, const char* op) {
    if (a.height != b.height || a.width != b.width) {
        throw DimensionError(std::string(op) + ": shape mismatch (" +
                             shape_str(a.height, a.width) + " vs " +
                             shape_str(b.height, b.width) + ")");
    }
}

void require_same_shape(const Image2D& a, const DisplacementField& b, const char* op) {
    if (a.height != b.height || a.width != b.width) {
        throw DimensionError(std::string(op) + ": shape mismatch (image " +
                             shape_str(a.height, a.width) + " vs field " +
                             shape_str(b.height, b.width) + ")");
    }
}

void require_same_shape(const SegmentationMap& a, const DisplacementField& b, const char* op) {
    if (a.height != b.height || a.width != b.width) {
        throw DimensionError(std::string(op) + ": shape mismatch (labels " +
                             shape_str(a.height, a.width) + " vs field " +
                             shape_str(b.height, b.width) + ")");
    }
}

void require_same_shape(const SegmentationMap& a, const SegmentationMap& b, const char* op) {
    if (a.height != b.height || a.width != b.width) {
        throw DimensionError(std::string(op) + ": shape mismatch (" +
                             shape_str(a.height, a.width) + " vs " +
                             shape_str(b.height, b.width) + ")");
    }
}

}  // namespace intenreg
