#include "intenreg/train.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "intenreg/rng.hpp"
#include "intenreg/warp.hpp"

namespace intenreg {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValidationError("TrainConfig: batch_size must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr))
        throw ValidationError("TrainConfig: lr must be positive and finite");
    stop.validate();
    loss.validate();
}

TrainReport train(NetParams& params, const std::vector<Image2D>& corpus,
                  const TrainConfig& cfg) {
    cfg.validate();
    params.validate();
    if (corpus.size() < 2)
        throw ValidationError("train: corpus must hold at least 2 images, got " +
                              std::to_string(corpus.size()));
    for (std::size_t i = 1; i < corpus.size(); ++i)
        require_same_shape(corpus[0], corpus[i], "train");

    const int n = int(corpus.size());
    const int steps_per_epoch = std::max(1, n / cfg.batch_size);

    Rng rng(mix_seed(cfg.seed, 0x545241494e));  // training stream

    std::vector<double> flat = params.to_flat();
    AdamState adam;
    adam.lr = cfg.lr;

    TrainReport report;
    double best_epoch_loss = std::numeric_limits<double>::infinity();
    int streak = 0;
    long global_step = 0;

    const int max_epochs = cfg.stop.max_iters;
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        double epoch_acc = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step, ++global_step) {
            // Ordered pairs with replacement; the draw order fixes the
            // gradient summation order.
            std::vector<std::pair<int, int>> batch(std::size_t(cfg.batch_size));
            for (auto& pr : batch) {
                pr.first = int(rng.next_below(std::uint64_t(n)));
                pr.second = int(rng.next_below(std::uint64_t(n)));
            }

            std::vector<double> grad_acc(flat.size(), 0.0);
            double batch_loss = 0.0;
            for (const auto& [ti, si] : batch) {
                ForwardTrace trace;
                const DisplacementField field =
                    forward(params, corpus[std::size_t(ti)], corpus[std::size_t(si)], &trace);
                DisplacementField d_field;
                const LossValue lv = composite_loss(corpus[std::size_t(ti)],
                                                    corpus[std::size_t(si)], field,
                                                    cfg.loss, &d_field);
                if (!std::isfinite(lv.total))
                    throw DivergenceError("train: non-finite loss at step " +
                                              std::to_string(global_step) + " of epoch " +
                                              std::to_string(epoch),
                                          epoch);
                batch_loss += lv.total;
                const NetGrads g = backward(params, trace, d_field);
                const std::vector<double> gf = g.to_flat();
                for (std::size_t i = 0; i < grad_acc.size(); ++i) grad_acc[i] += gf[i];
            }
            batch_loss /= cfg.batch_size;
            for (auto& v : grad_acc) v /= cfg.batch_size;

            adam_step(flat, grad_acc, adam);
            params.from_flat(flat);
            epoch_acc += batch_loss;
        }

        const double epoch_loss = epoch_acc / steps_per_epoch;
        report.epoch_losses.push_back(epoch_loss);
        report.epochs_run += 1;

        if (best_epoch_loss - epoch_loss > cfg.stop.delta) streak = 0;
        else streak += 1;
        if (epoch_loss < best_epoch_loss) best_epoch_loss = epoch_loss;

        if (streak >= cfg.stop.patience) {
            report.stopped_by = TrainStop::patience;
            return report;
        }
    }
    report.stopped_by = TrainStop::max_epochs;
    return report;
}

RegistrationResult predict_register(const NetParams& params, const Image2D& target,
                                    const Image2D& source, const LossConfig& cfg) {
    RegistrationResult res;
    res.field = forward(params, target, source);
    res.warped = warp(source, res.field);
    res.loss_trace.push_back(composite_loss(target, source, res.field, cfg));
    res.iterations = 1;
    // A forward prediction spends its whole (single-evaluation) budget.
    res.stopped_by = StopReason::max_iters;
    return res;
}

}  // namespace intenreg
