#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "intenreg/image.hpp"

namespace intenreg {

// Reads an 8- or 16-bit grayscale image (binary P5 PGM, or grayscale PNG),
// rescaled to [0,1] by the format maximum. Format chosen by file content.
Image2D read_image(const std::string& path);

// Writes at 16-bit precision; format chosen by extension (.pgm or .png).
void write_image(const Image2D& image, const std::string& path);

// Label maps travel as P5 PGM with raw label values, maxval = max label.
SegmentationMap read_labels(const std::string& path);
void write_labels(const SegmentationMap& seg, const std::string& path);

// 8-bit RGB PNG writer used by the plot renderer. `rgb` is row-major
// interleaved, 3 bytes per pixel.
void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb);

// Displacement fields round-trip losslessly through a little binary sidecar
// (magic, shape, then both channels as little-endian doubles).
void write_field(const DisplacementField& field, const std::string& path);
DisplacementField read_field(const std::string& path);

}  // namespace intenreg
