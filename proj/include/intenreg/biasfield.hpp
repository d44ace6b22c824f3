#pragma once

#include <optional>

#include "intenreg/engine.hpp"
#include "intenreg/image.hpp"

namespace intenreg {

// Gaussian-disc brightness perturbation. Centered on the image unless an
// explicit center is given.
struct BiasSpec {
    double amplitude = 0.1;
    double sigma = 20.0;
    std::optional<double> center_row;
    std::optional<double> center_col;

    void validate() const;
};

enum class PairKind { distinct, identical };

struct BiasExperimentReport {
    double dice_clean = 0.0;
    double dice_biased = 0.0;
    double drop = 0.0;  // dice_clean - dice_biased
    PairKind pair_kind = PairKind::distinct;
};

// bias(r,c) = amplitude * exp(-((r-cr)^2 + (c-cc)^2) / (2 sigma^2)).
Image2D make_bias(int height, int width, const BiasSpec& spec);

// Pixel-wise addition clipped back into [0,1].
Image2D apply_bias(const Image2D& image, const Image2D& bias);

// Registers the pair twice, once with the clean source and once with the
// biased source, and scores both registrations by mean dice. The warped
// labels always come from the clean source segmentation: the bias perturbs
// intensities, never anatomy.
BiasExperimentReport bias_experiment(const RegistrationEngine& engine,
                                     const Image2D& target_image,
                                     const SegmentationMap& target_labels,
                                     const Image2D& source_image,
                                     const SegmentationMap& source_labels,
                                     const BiasSpec& spec);

}  // namespace intenreg
