#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "intenreg/errors.hpp"
#include "intenreg/losses.hpp"
#include "intenreg/rng.hpp"
#include "intenreg/warp.hpp"
#include "testutil.hpp"

using namespace intenreg;

namespace {

Image2D from_flat(const std::vector<double>& flat, int h, int w) {
    Image2D img(h, w);
    img.data = flat;
    return img;
}

}  // namespace

TEST_CASE("mse identities and hand case") {
    Rng rng(1);
    const Image2D img = testutil::random_image(rng, 6, 6);
    Image2D grad;
    CHECK(mse(img, img, &grad) == 0.0);
    for (double g : grad.data) CHECK(g == 0.0);

    Image2D t(1, 2), w(1, 2);
    t.at(0, 0) = 0;
    t.at(0, 1) = 1;
    w.at(0, 0) = 1;
    w.at(0, 1) = 1;
    CHECK(mse(t, w, &grad) == doctest::Approx(0.5));
    CHECK(grad.at(0, 0) == doctest::Approx(1.0));
    CHECK(grad.at(0, 1) == doctest::Approx(0.0));

    CHECK_THROWS_AS(mse(Image2D(2, 2), Image2D(2, 3)), DimensionError);
}

TEST_CASE("mse gradient matches finite differences") {
    Rng rng(2);
    for (int inst = 0; inst < 5; ++inst) {
        const int h = 5, w = 7;
        const Image2D target = testutil::random_image(rng, h, w);
        const Image2D warped = testutil::random_image(rng, h, w);
        Image2D grad;
        mse(target, warped, &grad);
        testutil::fd_check(
            [&](const std::vector<double>& x) { return mse(target, from_flat(x, h, w)); },
            warped.data, grad.data, 1e-6);
    }
}

TEST_CASE("ncc identities, anti-correlation, constant degenerate case") {
    Rng rng(3);
    const Image2D img = testutil::random_image(rng, 8, 8);
    CHECK(ncc_loss(img, img) == doctest::Approx(-1.0).epsilon(1e-9));

    Image2D t(1, 2), w(1, 2);
    t.at(0, 0) = 0;
    t.at(0, 1) = 1;
    w.at(0, 0) = 1;
    w.at(0, 1) = 0;
    CHECK(ncc_loss(t, w) == doctest::Approx(1.0).epsilon(1e-6));

    const Image2D flat(8, 8, 0.37);
    CHECK(ncc_loss(img, flat) == doctest::Approx(0.0).epsilon(1e-9));

    CHECK_THROWS_AS(ncc_loss(Image2D(2, 2), Image2D(3, 2)), DimensionError);
}

TEST_CASE("ncc stays within [-1, 1] on random pairs") {
    Rng rng(4);
    for (int inst = 0; inst < 20; ++inst) {
        const Image2D a = testutil::random_image(rng, 6, 9);
        const Image2D b = testutil::random_image(rng, 6, 9);
        const double v = ncc_loss(a, b);
        CHECK(v >= -1.0 - 1e-12);
        CHECK(v <= 1.0 + 1e-12);
    }
}

TEST_CASE("ncc gradient matches finite differences") {
    Rng rng(5);
    for (int inst = 0; inst < 5; ++inst) {
        const int h = 6, w = 6;
        const Image2D target = testutil::random_image(rng, h, w);
        const Image2D warped = testutil::random_image(rng, h, w);
        Image2D grad;
        ncc_loss(target, warped, &grad);
        testutil::fd_check(
            [&](const std::vector<double>& x) {
                return ncc_loss(target, from_flat(x, h, w));
            },
            warped.data, grad.data, 1e-4);
    }
}

TEST_CASE("window stats on a constant image") {
    const Image2D img(7, 9, 0.42);
    const WindowStats s = window_stats(img, img, 3);
    REQUIRE(s.height == 5);
    REQUIRE(s.width == 7);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(s.mu_t[i] == doctest::Approx(0.42).epsilon(1e-12));
        CHECK(s.sigma_t[i] == doctest::Approx(0.0));
        CHECK(s.cov[i] == doctest::Approx(0.0));
    }
}

TEST_CASE("window stats hand case: 3x3 ramp, window 3") {
    Image2D img(3, 3);
    for (int i = 0; i < 9; ++i) img.data[i] = double(i);
    const WindowStats s = window_stats(img, img, 3);
    REQUIRE(s.size() == 1);
    CHECK(s.mu_t[0] == doctest::Approx(4.0));
    // Population variance 60/9.
    CHECK(s.sigma_t[0] * s.sigma_t[0] == doctest::Approx(60.0 / 9.0).epsilon(1e-12));
    CHECK(s.cov[0] == doctest::Approx(60.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("naive and integral-image window stats agree") {
    Rng rng(6);
    for (int inst = 0; inst < 25; ++inst) {
        const int h = 5 + int(rng.next_below(10));
        const int w = 5 + int(rng.next_below(10));
        const int win = (h < 7 || w < 7) ? 3 : 5;
        const Image2D a = testutil::random_image(rng, h, w);
        const Image2D b = testutil::random_image(rng, h, w);
        const WindowStats fast = window_stats(a, b, win);
        const WindowStats slow = window_stats_naive(a, b, win);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(std::fabs(fast.mu_t[i] - slow.mu_t[i]) < 1e-10);
            CHECK(std::fabs(fast.mu_s[i] - slow.mu_s[i]) < 1e-10);
            CHECK(std::fabs(fast.sigma_t[i] - slow.sigma_t[i]) < 1e-10);
            CHECK(std::fabs(fast.sigma_s[i] - slow.sigma_s[i]) < 1e-10);
            CHECK(std::fabs(fast.cov[i] - slow.cov[i]) < 1e-10);
        }
    }
}

TEST_CASE("window validation") {
    const Image2D img(8, 8, 0.5);
    CHECK_THROWS_AS(window_stats(img, img, 4), ValidationError);
    CHECK_THROWS_AS(window_stats(img, img, 1), ValidationError);
    CHECK_THROWS_AS(window_stats(img, img, 9), DimensionError);
}

TEST_CASE("ssim of an image with itself is 1") {
    Rng rng(7);
    LossConfig cfg;
    cfg.window = 5;
    for (int inst = 0; inst < 5; ++inst) {
        const Image2D img = testutil::random_image(rng, 9, 11);
        CHECK(std::fabs(ssim(img, img, cfg) - 1.0) < 1e-12);
    }
}

TEST_CASE("ssim closed form for two constant images") {
    // b = (2*0.2*0.8 + 1e-4) / (0.04 + 0.64 + 1e-4), c = st = 1.
    const Image2D a(16, 16, 0.2);
    const Image2D b(16, 16, 0.8);
    LossConfig cfg;
    const double expected = 0.3201 / 0.6801;
    CHECK(std::fabs(ssim(a, b, cfg) - expected) < 1e-6);
    CHECK(std::fabs(ssim(a, b, cfg) - 0.470666) < 1e-6);
}

TEST_CASE("ssim is symmetric") {
    Rng rng(8);
    LossConfig cfg;
    cfg.window = 7;
    for (int inst = 0; inst < 5; ++inst) {
        const Image2D a = testutil::random_image(rng, 12, 10);
        const Image2D b = testutil::random_image(rng, 12, 10);
        CHECK(std::fabs(ssim(a, b, cfg) - ssim(b, a, cfg)) < 1e-12);
    }
}

TEST_CASE("one minus ssim stays in [0, 2]") {
    Rng rng(9);
    LossConfig cfg;
    cfg.window = 5;
    for (int inst = 0; inst < 20; ++inst) {
        const Image2D a = testutil::random_image(rng, 8, 8);
        const Image2D b = testutil::random_image(rng, 8, 8);
        const double v = 1.0 - ssim(a, b, cfg);
        CHECK(v >= -1e-12);
        CHECK(v <= 2.0 + 1e-12);
    }
}

TEST_CASE("ssim gradient matches finite differences") {
    Rng rng(10);
    LossConfig cfg;
    cfg.window = 5;
    for (int inst = 0; inst < 5; ++inst) {
        const int h = 9, w = 8;
        const Image2D target = testutil::random_image(rng, h, w);
        const Image2D warped = testutil::random_image(rng, h, w);
        Image2D grad;
        ssim(target, warped, cfg, &grad);
        testutil::fd_check(
            [&](const std::vector<double>& x) {
                return ssim(target, from_flat(x, h, w), cfg);
            },
            warped.data, grad.data, 1e-4);
    }
}

TEST_CASE("ssim and mse are invariant under a shared rigid shift") {
    // Shift both inputs by the same whole-pixel offset (exact under bilinear
    // interpolation) and compare on the crop untouched by border clamping:
    // the pixel pairs in view are identical, so the metrics must agree.
    Rng rng(11);
    const int h = 14, w = 14, s = 2;
    const Image2D a = testutil::random_image(rng, h, w);
    const Image2D b = testutil::random_image(rng, h, w);

    auto crop = [&](const Image2D& img) {
        Image2D out(h - s, w - s);
        for (int r = 0; r < h - s; ++r)
            for (int c = 0; c < w - s; ++c) out.at(r, c) = img.at(r, c);
        return out;
    };
    auto crop_at = [&](const Image2D& img) {
        Image2D out(h - s, w - s);
        for (int r = 0; r < h - s; ++r)
            for (int c = 0; c < w - s; ++c) out.at(r, c) = img.at(r + s, c + s);
        return out;
    };

    const DisplacementField shift(h, w, double(s), double(s));
    const Image2D sa = crop(warp(a, shift));
    const Image2D sb = crop(warp(b, shift));
    const Image2D da = crop_at(a);
    const Image2D db = crop_at(b);

    LossConfig cfg;
    cfg.window = 5;
    CHECK(std::fabs(mse(sa, sb) - mse(da, db)) < 1e-12);
    CHECK(std::fabs(ssim(sa, sb, cfg) - ssim(da, db, cfg)) < 1e-12);
}

TEST_CASE("field regularizer identities and hand case") {
    CHECK(field_regularizer(DisplacementField(6, 6)) == 0.0);

    DisplacementField f(5, 8);
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 8; ++c) f.col_at(r, c) = double(c);
    CHECK(field_regularizer(f) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("field regularizer gradient matches finite differences") {
    Rng rng(12);
    for (int inst = 0; inst < 5; ++inst) {
        const int h = 6, w = 5;
        const DisplacementField f = testutil::random_field(rng, h, w, 2.0);
        DisplacementField grad;
        field_regularizer(f, &grad);

        std::vector<double> x(f.u_row);
        x.insert(x.end(), f.u_col.begin(), f.u_col.end());
        std::vector<double> ga(grad.u_row);
        ga.insert(ga.end(), grad.u_col.begin(), grad.u_col.end());
        testutil::fd_check(
            [&](const std::vector<double>& flat) {
                DisplacementField g(h, w);
                std::copy(flat.begin(), flat.begin() + h * w, g.u_row.begin());
                std::copy(flat.begin() + h * w, flat.end(), g.u_col.begin());
                return field_regularizer(g);
            },
            x, ga, 1e-6);
    }
}

TEST_CASE("composite loss decomposes exactly at the alpha extremes") {
    Rng rng(13);
    const int h = 16, w = 16;
    const Image2D target = testutil::random_image(rng, h, w);
    const Image2D source = testutil::random_image(rng, h, w);
    const DisplacementField field = testutil::random_field(rng, h, w, 1.0);
    const Image2D warped = warp(source, field);

    LossConfig cfg;
    cfg.alpha = 0.0;
    reset_ssim_eval_count();
    const LossValue v0 = composite_loss(target, source, field, cfg);
    CHECK(ssim_eval_count() == 0);  // the alpha = 0 path never touches SSIM
    CHECK(v0.similarity_term == mse(target, warped));
    CHECK(v0.regularizer_term == 0.01 * field_regularizer(field));
    CHECK(v0.total == v0.similarity_term + v0.regularizer_term);

    cfg.alpha = 1.0;
    const LossValue v1 = composite_loss(target, source, field, cfg);
    CHECK(v1.similarity_term == 1.0 - ssim(target, warped, cfg));
    CHECK(v1.total == v1.similarity_term + v1.regularizer_term);

    cfg.alpha = 0.5;
    cfg.base = LossConfig::Base::NCC;
    const LossValue vh = composite_loss(target, source, field, cfg);
    const double expect = 0.5 * (1.0 - ssim(target, warped, cfg)) +
                          0.5 * ncc_loss(target, warped);
    CHECK(vh.similarity_term == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("composite gradient matches finite differences end to end") {
    Rng rng(14);
    const int h = 12, w = 12;
    for (double alpha : {0.0, 0.5, 1.0}) {
        for (auto base : {LossConfig::Base::MSE, LossConfig::Base::NCC}) {
            LossConfig cfg;
            cfg.alpha = alpha;
            cfg.base = base;
            cfg.window = 5;
            const Image2D target = testutil::random_image(rng, h, w);
            const Image2D source = testutil::random_image(rng, h, w);
            const DisplacementField field = testutil::random_field(rng, h, w, 1.0);

            DisplacementField grad;
            composite_loss(target, source, field, cfg, &grad);

            std::vector<double> x(field.u_row);
            x.insert(x.end(), field.u_col.begin(), field.u_col.end());
            std::vector<double> ga(grad.u_row);
            ga.insert(ga.end(), grad.u_col.begin(), grad.u_col.end());
            testutil::fd_check(
                [&](const std::vector<double>& flat) {
                    DisplacementField g(h, w);
                    std::copy(flat.begin(), flat.begin() + h * w, g.u_row.begin());
                    std::copy(flat.begin() + h * w, flat.end(), g.u_col.begin());
                    return composite_loss(target, source, g, cfg).total;
                },
                x, ga, 1e-4);
        }
    }
}

TEST_CASE("loss config validation") {
    LossConfig cfg;
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = LossConfig{};
    cfg.beta = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = LossConfig{};
    cfg.window = 4;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = LossConfig{};
    CHECK_NOTHROW(cfg.validate());
}
