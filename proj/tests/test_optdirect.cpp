#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>

#include "intenreg/errors.hpp"
#include "intenreg/evalharness.hpp"
#include "intenreg/optdirect.hpp"
#include "intenreg/phantom.hpp"
#include "intenreg/rng.hpp"
#include "intenreg/warp.hpp"
#include "testutil.hpp"

using namespace intenreg;

TEST_CASE("adam leaves params alone on zero gradient but advances the step") {
    std::vector<double> p{1.0, -2.0, 3.0};
    const std::vector<double> g{0.0, 0.0, 0.0};
    AdamState st;
    adam_step(p, g, st);
    CHECK(st.step == 1);
    CHECK(p == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam first step matches the hand-evaluated recurrence") {
    // t = 1: m_hat = g, v_hat = g^2, update = -lr * g / (|g| + eps).
    std::vector<double> p{0.0};
    const std::vector<double> g{1.0};
    AdamState st;
    st.lr = 0.1;
    adam_step(p, g, st);
    CHECK(p[0] == doctest::Approx(-0.0999999).epsilon(1e-6));
    CHECK(p[0] > -0.1);
    CHECK(p[0] < -0.0999);
}

TEST_CASE("two small adam steps differ from one doubled-lr step") {
    std::vector<double> p1{0.5}, p2{0.5};
    const std::vector<double> g{0.7};
    AdamState a;
    a.lr = 0.01;
    adam_step(p1, g, a);
    adam_step(p1, g, a);
    AdamState b;
    b.lr = 0.02;
    adam_step(p2, g, b);
    CHECK(p1[0] != p2[0]);
}

TEST_CASE("adam rejects shape mismatches") {
    std::vector<double> p{1.0, 2.0};
    const std::vector<double> g{1.0};
    AdamState st;
    CHECK_THROWS_AS(adam_step(p, g, st), DimensionError);

    AdamState stale;
    std::vector<double> q{1.0};
    const std::vector<double> g1{0.5};
    adam_step(q, g1, stale);
    std::vector<double> wide{1.0, 2.0};
    const std::vector<double> g2{0.5, 0.5};
    CHECK_THROWS_AS(adam_step(wide, g2, stale), DimensionError);
}

TEST_CASE("registering an image onto itself keeps the near-zero field") {
    PhantomConfig pcfg;
    pcfg.height = 32;
    pcfg.width = 32;
    pcfg.seed = 5;
    const PhantomSample s = generate_subject(pcfg, 0);

    LossConfig cfg;  // alpha = 0, MSE
    AdamState adam;
    adam.lr = 0.25;
    StopRule stop;
    const RegistrationResult res = register_direct(s.image, s.image, cfg, adam, stop);

    CHECK(res.loss_trace.front().total == doctest::Approx(0.0).epsilon(1e-12));
    double mean_abs = 0;
    for (double v : res.field.u_row) mean_abs += std::fabs(v);
    for (double v : res.field.u_col) mean_abs += std::fabs(v);
    mean_abs /= double(res.field.u_row.size() + res.field.u_col.size());
    CHECK(mean_abs < 0.05);

    // Labels survive the returned field untouched.
    const SegmentationMap warped = warp_labels(s.labels, res.field);
    for (std::int32_t lbl = 1; lbl < pcfg.n_regions; ++lbl)
        CHECK(dice(s.labels, warped, lbl) >= 1.0 - 1e-6);
}

TEST_CASE("registration improves dice on a translated smooth phantom") {
    PhantomConfig pcfg;
    pcfg.height = 48;
    pcfg.width = 48;
    pcfg.seed = 9;
    const PhantomSample s = generate_subject(pcfg, 0);

    const DisplacementField shift(48, 48, 2.0, 0.0);
    const Image2D moved = warp(s.image, shift);
    const SegmentationMap moved_labels = warp_labels(s.labels, shift);

    LossConfig cfg;
    AdamState adam;
    adam.lr = 0.25;
    StopRule stop;
    stop.max_iters = 400;
    const RegistrationResult res = register_direct(s.image, moved, cfg, adam, stop);

    const double before = mean_dice(s.labels, moved_labels);
    const double after = mean_dice(s.labels, warp_labels(moved_labels, res.field));
    CHECK(after > before);
    CHECK(res.loss_trace.back().total <= res.loss_trace.front().total);
}

TEST_CASE("degenerate stop rule runs exactly one iteration") {
    Rng rng(3);
    const Image2D t = testutil::random_image(rng, 12, 12);
    const Image2D s = testutil::random_image(rng, 12, 12);
    StopRule stop;
    stop.patience = 1;
    stop.delta = std::numeric_limits<double>::infinity();
    const RegistrationResult res =
        register_direct(t, s, LossConfig{}, AdamState{}, stop);
    CHECK(res.iterations == 1);
    CHECK(res.loss_trace.size() == 1);
    CHECK(res.stopped_by == StopReason::patience);
}

TEST_CASE("registration is bit-deterministic") {
    Rng rng(4);
    const Image2D t = testutil::random_image(rng, 16, 16);
    const Image2D s = testutil::random_image(rng, 16, 16);
    AdamState adam;
    adam.lr = 0.1;
    StopRule stop;
    stop.max_iters = 40;
    const RegistrationResult a = register_direct(t, s, LossConfig{}, adam, stop);
    const RegistrationResult b = register_direct(t, s, LossConfig{}, adam, stop);
    CHECK(a.field.u_row == b.field.u_row);
    CHECK(a.field.u_col == b.field.u_col);
    CHECK(a.iterations == b.iterations);
    REQUIRE(a.loss_trace.size() == b.loss_trace.size());
    for (std::size_t i = 0; i < a.loss_trace.size(); ++i)
        CHECK(a.loss_trace[i].total == b.loss_trace[i].total);
}

TEST_CASE("final loss never exceeds the initial loss") {
    Rng rng(5);
    for (int inst = 0; inst < 4; ++inst) {
        const Image2D t = testutil::random_image(rng, 14, 14);
        const Image2D s = testutil::random_image(rng, 14, 14);
        AdamState adam;
        adam.lr = 0.5;
        StopRule stop;
        stop.max_iters = 60;
        const RegistrationResult res = register_direct(t, s, LossConfig{}, adam, stop);
        // The returned field is the best iterate.
        LossConfig cfg;
        const double best = composite_loss(t, s, res.field, cfg).total;
        CHECK(best <= res.loss_trace.front().total + 1e-15);
        CHECK(res.loss_trace.back().total >= best - 1e-15);
    }
}

TEST_CASE("heavier regularization yields a smoother field") {
    PhantomConfig pcfg;
    pcfg.height = 32;
    pcfg.width = 32;
    pcfg.seed = 21;
    const PhantomSample a = generate_subject(pcfg, 0);
    const PhantomSample b = generate_subject(pcfg, 1);

    AdamState adam;
    adam.lr = 0.25;
    StopRule stop;
    stop.max_iters = 150;

    LossConfig weak;
    weak.beta = 0.01;
    LossConfig strong;
    strong.beta = 1000.0;
    const RegistrationResult rw = register_direct(a.image, b.image, weak, adam, stop);
    const RegistrationResult rs = register_direct(a.image, b.image, strong, adam, stop);
    CHECK(field_regularizer(rs.field) < field_regularizer(rw.field));
}

TEST_CASE("divergence carries the iteration index and the partial trace") {
    Rng rng(6);
    const Image2D t = testutil::random_image(rng, 10, 10);
    const Image2D s = testutil::random_image(rng, 10, 10);
    AdamState adam;
    adam.lr = 1e160;  // first step overflows the regularizer
    StopRule stop;
    try {
        register_direct(t, s, LossConfig{}, adam, stop);
        FAIL("expected divergence");
    } catch (const RegistrationDivergence& e) {
        CHECK(e.iteration >= 1);
        CHECK(e.partial_trace.size() == std::size_t(e.iteration));
    }
}

TEST_CASE("stop rule validation") {
    StopRule stop;
    stop.patience = 0;
    CHECK_THROWS_AS(stop.validate(), ValidationError);
    stop = StopRule{};
    stop.delta = 0.0;
    CHECK_THROWS_AS(stop.validate(), ValidationError);
    stop = StopRule{};
    stop.max_iters = 0;
    CHECK_THROWS_AS(stop.validate(), ValidationError);

    AdamState adam;
    adam.beta1 = 1.0;
    CHECK_THROWS_AS(adam.validate(), ValidationError);
}
