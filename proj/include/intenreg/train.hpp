#pragma once

#include <cstdint>
#include <vector>

#include "intenreg/losses.hpp"
#include "intenreg/net.hpp"
#include "intenreg/optdirect.hpp"

namespace intenreg {

struct TrainConfig {
    int batch_size = 5;
    double lr = 0.0001;
    StopRule stop{1e-7, 25, 500};  // max_iters acts as the epoch cap here
    LossConfig loss;
    std::uint64_t seed = 0;

    void validate() const;
};

enum class TrainStop { patience, max_epochs };

struct TrainReport {
    std::vector<double> epoch_losses;
    int epochs_run = 0;
    TrainStop stopped_by = TrainStop::max_epochs;
};

// Minimizes the composite loss over the network parameters on a corpus of
// same-shaped images. Each step draws batch_size ordered (target, source)
// pairs uniformly with replacement from the seeded generator and applies
// one Adam update on the batch-mean gradient; an epoch is
// max(1, corpus_size / batch_size) steps. Early stopping follows the
// delta/patience rule on the epoch mean loss. Updates `params` in place.
TrainReport train(NetParams& params, const std::vector<Image2D>& corpus,
                  const TrainConfig& cfg);

// Single forward prediction packaged like a registration run: warps the
// source with the predicted field and reports the composite loss as a
// one-entry trace.
RegistrationResult predict_register(const NetParams& params, const Image2D& target,
                                    const Image2D& source,
                                    const LossConfig& cfg = LossConfig{});

}  // namespace intenreg
