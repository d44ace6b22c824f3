#pragma once

#include <functional>

#include "intenreg/image.hpp"
#include "intenreg/losses.hpp"
#include "intenreg/net.hpp"
#include "intenreg/optdirect.hpp"

namespace intenreg {

// Any registration strategy reduced to its essence: map a (target, source)
// pair to the displacement field that pulls source onto target.
using RegistrationEngine =
    std::function<DisplacementField(const Image2D& target, const Image2D& source)>;

// Always returns the zero field (the pre-registration baseline).
RegistrationEngine make_identity_engine();

// Per-pair direct optimization of the composite loss.
RegistrationEngine make_direct_engine(const LossConfig& cfg, const AdamState& adam,
                                      const StopRule& stop);

// Single forward pass of a (trained) amortized model.
RegistrationEngine make_amortized_engine(const NetParams& params);

}  // namespace intenreg
