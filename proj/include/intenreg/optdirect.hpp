#pragma once

#include <vector>

#include "intenreg/adam.hpp"
#include "intenreg/image.hpp"
#include "intenreg/losses.hpp"

namespace intenreg {

// Improvement-based early stopping: quit once the best loss seen so far has
// failed to improve by more than `delta` for `patience` consecutive
// iterations.
struct StopRule {
    double delta = 1e-7;
    int patience = 25;
    int max_iters = 2000;

    void validate() const;
};

enum class StopReason { patience, max_iters };

struct RegistrationResult {
    DisplacementField field;   // best-loss iterate, not the last
    Image2D warped;            // source warped by `field`
    std::vector<LossValue> loss_trace;
    int iterations = 0;
    StopReason stopped_by = StopReason::max_iters;
};

// Divergence inside register_direct, carrying everything evaluated up to
// the failing iteration so callers can still persist the trace.
class RegistrationDivergence : public DivergenceError {
  public:
    RegistrationDivergence(const std::string& msg, int iter,
                           std::vector<LossValue> trace)
        : DivergenceError(msg, iter), partial_trace(std::move(trace)) {}

    std::vector<LossValue> partial_trace;
};

// Registers `source` onto `target` by minimizing the composite loss over a
// dense per-pixel displacement field, starting from the identity (zero
// field). Each iteration evaluates the loss with its gradient and applies
// one Adam update. Throws DivergenceError if the loss or gradient goes
// non-finite.
RegistrationResult register_direct(const Image2D& target, const Image2D& source,
                                   const LossConfig& cfg, AdamState adam, StopRule stop);

}  // namespace intenreg
