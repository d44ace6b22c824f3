#pragma once

#include <cstdint>
#include <vector>

#include "intenreg/image.hpp"

namespace intenreg {

// Composite-loss configuration: total = alpha*(1 - SSIM) + (1-alpha)*base
// + beta*R, with the windowed-SSIM stabilizing constants.
struct LossConfig {
    enum class Base { MSE, NCC };

    double alpha = 0.0;     // weight of the structural term, in [0,1]
    double beta = 0.01;     // field-smoothness weight
    Base base = Base::MSE;
    int window = 11;        // odd, >= 3
    double c1 = 1e-4;       // (0.01)^2
    double c2 = 9e-4;       // (0.03)^2
    double c3 = 4.5e-4;     // c2 / 2

    void validate() const;
};

// Windowed first/second-order statistics over all fully-interior window
// positions: map shape (H - window + 1) x (W - window + 1).
struct WindowStats {
    int height = 0;
    int width = 0;
    std::vector<double> mu_t, mu_s, sigma_t, sigma_s, cov;
    std::size_t size() const { return std::size_t(height) * width; }
};

struct LossValue {
    double total = 0.0;
    double similarity_term = 0.0;
    double regularizer_term = 0.0;
};

// Mean squared error; optional gradient with respect to `warped`.
double mse(const Image2D& target, const Image2D& warped, Image2D* grad_wrt_warped = nullptr);

// Global normalized cross-correlation of mean-centered images, negated so
// that identical inputs score -1. Denominators carry an epsilon of 1e-8
// under each square root.
double ncc_loss(const Image2D& target, const Image2D& warped,
                Image2D* grad_wrt_warped = nullptr);

// Box-window statistics via running sums (integral images).
WindowStats window_stats(const Image2D& target, const Image2D& warped, int window);

// Direct sliding-loop counterpart, cross-checked against window_stats.
WindowStats window_stats_naive(const Image2D& target, const Image2D& warped, int window);

// Mean windowed SSIM (brightness * contrast * structure per window);
// optional analytic gradient with respect to every warped pixel.
double ssim(const Image2D& target, const Image2D& warped, const LossConfig& cfg,
            Image2D* grad_wrt_warped = nullptr);

// Diffusion regularizer: mean squared forward difference of both field
// channels, row and column direction terms each averaged over their own
// difference count.
double field_regularizer(const DisplacementField& field,
                         DisplacementField* grad_wrt_field = nullptr);

// Warps `source` by `field` and evaluates the full composite objective.
// When alpha == 0 the SSIM path is never evaluated; when alpha == 1 the base
// metric is never evaluated. The optional gradient is with respect to the
// field, assembled through warp_backward plus the regularizer gradient.
LossValue composite_loss(const Image2D& target, const Image2D& source,
                         const DisplacementField& field, const LossConfig& cfg,
                         DisplacementField* grad_wrt_field = nullptr);

// Number of ssim() evaluations since process start (or the last reset).
// Lets tests assert the alpha = 0 path never touches SSIM.
std::uint64_t ssim_eval_count();
void reset_ssim_eval_count();

}  // namespace intenreg
