#pragma once

#include "intenreg/image.hpp"

namespace intenreg {

// Bilinear resampling: output(r,c) = source sampled at
// (r + u_row(r,c), c + u_col(r,c)), coordinates clamped into the image
// (border replicate).
Image2D warp(const Image2D& source, const DisplacementField& field);

// Gradient of a scalar loss with respect to the field, given
// upstream = dLoss/d(warped image). At coordinates altered by clamping the
// derivative along the clamped axis is zero.
DisplacementField warp_backward(const Image2D& source, const DisplacementField& field,
                                const Image2D& upstream);

// Nearest-neighbor resampling of integer labels under the same convention.
// Label values are preserved exactly.
SegmentationMap warp_labels(const SegmentationMap& seg, const DisplacementField& field);

}  // namespace intenreg
