#pragma once

#include <cstdint>
#include <string>

#include "intenreg/biasfield.hpp"
#include "intenreg/losses.hpp"
#include "intenreg/phantom.hpp"
#include "intenreg/train.hpp"

namespace intenreg {

// Everything a run can configure, merged from defaults, an optional INI
// file, and command-line overrides (in that order). Sections and keys:
//
//   [loss]     alpha, beta, base (mse|ncc), window, c1, c2, c3
//   [stop]     delta, patience, max_iters        (direct-registration cap)
//   [train]    batch_size, lr, max_epochs
//   [direct]   lr                                 (field-optimization step)
//   [phantom]  height, width, n_regions, intensity_jitter,
//              deform_amplitude, deform_smoothness, noise_sigma
//   [bias]     amplitude, sigma, center_row, center_col
//
// Unknown sections or keys are hard errors: a typo must never silently
// fall back to a default.
struct RunConfig {
    LossConfig loss;
    StopRule stop;
    int train_batch_size = 5;
    double train_lr = 0.0001;
    int train_max_epochs = 500;
    double direct_lr = 0.25;
    PhantomConfig phantom;
    BiasSpec bias;
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;

    // Assembled views for the library entry points. The global seed feeds
    // every random draw.
    TrainConfig train_config() const;
    AdamState direct_adam() const;
    PhantomConfig phantom_config() const;
};

RunConfig parse_run_config(const std::string& ini_text, const std::string& origin);
RunConfig load_run_config(const std::string& path);

}  // namespace intenreg
