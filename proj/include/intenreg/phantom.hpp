#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "intenreg/image.hpp"

namespace intenreg {

struct PhantomConfig {
    int height = 96;
    int width = 96;
    int n_regions = 5;              // label ids 0..n_regions-1, 0 = background
    double intensity_jitter = 0.08;  // per-subject, per-region uniform shift
    double deform_amplitude = 3.0;   // max |u| of the per-subject warp, px
    double deform_smoothness = 8.0;  // Gaussian scale of the warp field, px
    double noise_sigma = 0.01;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PhantomSample {
    Image2D image;
    SegmentationMap labels;
    int subject_id = 0;
};

// One synthetic subject: the canonical nested-region anatomy (shared across
// all subjects of a config) warped by a subject-specific smooth random
// displacement, with per-subject region intensities and pixel noise. Fully
// determined by (cfg, subject_id).
PhantomSample generate_subject(const PhantomConfig& cfg, int subject_id);

// Subjects 0..n_subjects-1.
std::vector<PhantomSample> generate_corpus(const PhantomConfig& cfg, int n_subjects);

// Directory layout: subject_<id>_img.pgm (16-bit), subject_<id>_seg.pgm,
// and a plain-text manifest echoing the config and listing the subjects.
void write_corpus(const std::string& dir, const std::vector<PhantomSample>& samples,
                  const PhantomConfig& cfg);
std::vector<PhantomSample> read_corpus(const std::string& dir);

// Separable Gaussian blur with replicated borders; sigma = 0 is identity.
// Shared by the generator (anatomy softening, warp-field smoothing) and
// exposed for tests.
Image2D gaussian_blur(const Image2D& img, double sigma);

}  // namespace intenreg
