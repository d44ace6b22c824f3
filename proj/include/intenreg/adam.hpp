#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "intenreg/errors.hpp"

namespace intenreg {

// Bias-corrected Adam over a flat parameter vector. The moment buffers are
// sized lazily on first use and locked to that shape afterwards.
struct AdamState {
    std::int64_t step = 0;
    std::vector<double> m;
    std::vector<double> v;
    double lr = 0.0001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void validate() const;
};

// One in-place update: params -= lr * m_hat / (sqrt(v_hat) + eps).
// Increments state.step first, so the bias correction sees t = 1 on the
// first call.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace intenreg
