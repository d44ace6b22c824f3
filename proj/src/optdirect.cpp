#include "intenreg/optdirect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "intenreg/warp.hpp"

namespace intenreg {

void AdamState::validate() const {
    if (step < 0) throw ValidationError("AdamState: step must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw ValidationError("AdamState: betas must lie in [0,1)");
    if (!(eps > 0.0)) throw ValidationError("AdamState: eps must be > 0");
    if (!std::isfinite(lr)) throw ValidationError("AdamState: lr must be finite");
    if (m.size() != v.size())
        throw DimensionError("AdamState: moment buffers disagree in size");
}

void StopRule::validate() const {
    if (!(delta > 0.0)) throw ValidationError("StopRule: delta must be > 0");
    if (patience < 1) throw ValidationError("StopRule: patience must be >= 1");
    if (max_iters < 1) throw ValidationError("StopRule: max_iters must be >= 1");
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size())
        throw DimensionError("adam_step: params size " + std::to_string(params.size()) +
                             " vs grads size " + std::to_string(grads.size()));
    if (state.m.empty() && state.v.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size())
        throw DimensionError("adam_step: state sized for " + std::to_string(state.m.size()) +
                             " parameters, got " + std::to_string(params.size()));

    state.step += 1;
    const double t = double(state.step);
    const double corr1 = 1.0 - std::pow(state.beta1, t);
    const double corr2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / corr1;
        const double v_hat = state.v[i] / corr2;
        params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
}

RegistrationResult register_direct(const Image2D& target, const Image2D& source,
                                   const LossConfig& cfg, AdamState adam, StopRule stop) {
    require_same_shape(target, source, "register_direct");
    cfg.validate();
    adam.validate();
    stop.validate();

    const int h = target.height, w = target.width;
    const std::size_t half = std::size_t(h) * w;

    DisplacementField field(h, w);
    DisplacementField best_field = field;
    double best_loss = std::numeric_limits<double>::infinity();

    // Adam runs over the concatenated [u_row; u_col] vector.
    std::vector<double> params(2 * half, 0.0);
    std::vector<double> grads(2 * half, 0.0);

    RegistrationResult res;
    int streak = 0;

    for (int it = 0; it < stop.max_iters; ++it) {
        DisplacementField g;
        const LossValue lv = composite_loss(target, source, field, cfg, &g);

        bool finite = std::isfinite(lv.total);
        for (std::size_t i = 0; finite && i < half; ++i)
            finite = std::isfinite(g.u_row[i]) && std::isfinite(g.u_col[i]);
        if (!finite)
            throw RegistrationDivergence("register_direct: non-finite loss or gradient",
                                         it, std::move(res.loss_trace));

        res.loss_trace.push_back(lv);
        res.iterations += 1;

        // Patience counts iterations that failed to beat the best-so-far
        // loss by more than delta. With delta = +inf the very first
        // iteration already counts as stalled (inf > inf is false).
        if (best_loss - lv.total > stop.delta) streak = 0;
        else streak += 1;

        if (lv.total < best_loss) {
            best_loss = lv.total;
            best_field = field;
        }

        if (streak >= stop.patience) {
            res.stopped_by = StopReason::patience;
            break;
        }
        if (it + 1 == stop.max_iters) {
            res.stopped_by = StopReason::max_iters;
            break;
        }

        std::copy(field.u_row.begin(), field.u_row.end(), params.begin());
        std::copy(field.u_col.begin(), field.u_col.end(), params.begin() + half);
        std::copy(g.u_row.begin(), g.u_row.end(), grads.begin());
        std::copy(g.u_col.begin(), g.u_col.end(), grads.begin() + half);
        adam_step(params, grads, adam);
        std::copy(params.begin(), params.begin() + half, field.u_row.begin());
        std::copy(params.begin() + half, params.end(), field.u_col.begin());
    }

    res.field = std::move(best_field);
    res.warped = warp(source, res.field);
    return res;
}

}  // namespace intenreg
