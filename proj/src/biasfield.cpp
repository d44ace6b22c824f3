#include "intenreg/biasfield.hpp"

#include <algorithm>
#include <cmath>

#include "intenreg/evalharness.hpp"
#include "intenreg/warp.hpp"

namespace intenreg {

void BiasSpec::validate() const {
    if (!(sigma > 0.0)) throw ValidationError("BiasSpec: sigma must be > 0");
    if (!std::isfinite(amplitude)) throw ValidationError("BiasSpec: amplitude must be finite");
    if (center_row.has_value() != center_col.has_value())
        throw ValidationError("BiasSpec: center must set both coordinates or neither");
}

Image2D make_bias(int height, int width, const BiasSpec& spec) {
    spec.validate();
    if (height < 1 || width < 1)
        throw DimensionError("make_bias: non-positive shape");
    const double cr = spec.center_row.value_or(0.5 * (height - 1));
    const double cc = spec.center_col.value_or(0.5 * (width - 1));
    const double inv = 1.0 / (2.0 * spec.sigma * spec.sigma);

    Image2D b(height, width);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
            const double dr = r - cr, dc = c - cc;
            b.at(r, c) = spec.amplitude * std::exp(-(dr * dr + dc * dc) * inv);
        }
    return b;
}

Image2D apply_bias(const Image2D& image, const Image2D& bias) {
    require_same_shape(image, bias, "apply_bias");
    Image2D out = image;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = std::clamp(out.data[i] + bias.data[i], 0.0, 1.0);
    return out;
}

BiasExperimentReport bias_experiment(const RegistrationEngine& engine,
                                     const Image2D& target_image,
                                     const SegmentationMap& target_labels,
                                     const Image2D& source_image,
                                     const SegmentationMap& source_labels,
                                     const BiasSpec& spec) {
    require_same_shape(target_image, source_image, "bias_experiment");
    require_same_shape(target_labels, source_labels, "bias_experiment");

    BiasExperimentReport report;
    report.pair_kind = (target_image.data == source_image.data &&
                        target_labels.labels == source_labels.labels)
                           ? PairKind::identical
                           : PairKind::distinct;

    const DisplacementField field_clean = engine(target_image, source_image);
    report.dice_clean =
        mean_dice(target_labels, warp_labels(source_labels, field_clean));

    const Image2D biased =
        apply_bias(source_image, make_bias(source_image.height, source_image.width, spec));
    const DisplacementField field_biased = engine(target_image, biased);
    report.dice_biased =
        mean_dice(target_labels, warp_labels(source_labels, field_biased));

    report.drop = report.dice_clean - report.dice_biased;
    return report;
}

}  // namespace intenreg
