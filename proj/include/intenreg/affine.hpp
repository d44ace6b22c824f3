#pragma once

#include "intenreg/image.hpp"

namespace intenreg {

// Moment-based global pre-alignment: translation from intensity centroids,
// scale from the ratio of intensity-weighted RMS radii, rotation from the
// principal axis of the second central moments. Applying the result to
// `source` aligns its moments to `target`'s.
AffineParams affine_prealign(const Image2D& target, const Image2D& source);

// Resamples under the sampling map S(x) = s*R(x - m) + m + t (m = image
// center) with bilinear interpolation and coordinate clamping. Identity
// params reproduce the input exactly.
Image2D apply_affine(const Image2D& image, const AffineParams& params);

// Same sampling map applied to labels with nearest-neighbor interpolation.
SegmentationMap apply_affine_labels(const SegmentationMap& seg, const AffineParams& params);

// Params of the inverse map, S_inv such that S_inv(S(x)) = x.
AffineParams affine_invert(const AffineParams& params);

}  // namespace intenreg
