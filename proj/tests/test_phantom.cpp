#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "intenreg/errors.hpp"
#include "intenreg/evalharness.hpp"
#include "intenreg/phantom.hpp"
#include "testutil.hpp"

using namespace intenreg;

namespace {

PhantomConfig small_cfg(std::uint64_t seed) {
    PhantomConfig cfg;
    cfg.height = 32;
    cfg.width = 32;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("same config and subject id give bit-identical samples") {
    const PhantomConfig cfg = small_cfg(7);
    const PhantomSample a = generate_subject(cfg, 3);
    const PhantomSample b = generate_subject(cfg, 3);
    CHECK(a.image.data == b.image.data);
    CHECK(a.labels.labels == b.labels.labels);
}

TEST_CASE("degenerate config collapses all subjects onto one anatomy") {
    PhantomConfig cfg = small_cfg(11);
    cfg.deform_amplitude = 0.0;
    cfg.intensity_jitter = 0.0;
    cfg.noise_sigma = 0.0;
    const PhantomSample a = generate_subject(cfg, 0);
    const PhantomSample b = generate_subject(cfg, 5);
    CHECK(a.image.data == b.image.data);
    CHECK(a.labels.labels == b.labels.labels);
    for (std::int32_t lbl = 1; lbl < cfg.n_regions; ++lbl)
        CHECK(dice(a.labels, b.labels, lbl) == 1.0);
}

TEST_CASE("default subjects genuinely differ") {
    PhantomConfig cfg;
    cfg.height = 64;
    cfg.width = 64;
    cfg.seed = 13;
    const PhantomSample a = generate_subject(cfg, 0);
    const PhantomSample b = generate_subject(cfg, 1);
    CHECK(mean_dice(a.labels, b.labels) < 1.0);
    CHECK(a.image.data != b.image.data);
}

TEST_CASE("every sample satisfies the type invariants") {
    PhantomConfig cfg = small_cfg(17);
    const auto corpus = generate_corpus(cfg, 32);
    REQUIRE(corpus.size() == 32);
    for (const auto& s : corpus) {
        s.image.validate();
        for (double v : s.image.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        std::set<std::int32_t> seen(s.labels.labels.begin(), s.labels.labels.end());
        REQUIRE(int(seen.size()) == cfg.n_regions);
        CHECK(*seen.begin() == 0);
        CHECK(*seen.rbegin() == cfg.n_regions - 1);
    }
}

TEST_CASE("intensity steps line up with label boundaries") {
    PhantomConfig cfg;
    cfg.height = 64;
    cfg.width = 64;
    cfg.seed = 19;
    cfg.noise_sigma = 0.0;
    const PhantomSample s = generate_subject(cfg, 2);

    // Collect image-gradient magnitude at label-edge and interior pixels.
    std::vector<double> edge_mag, interior_mag;
    for (int r = 1; r < 63; ++r)
        for (int c = 1; c < 63; ++c) {
            const double gr = s.image.at(r + 1, c) - s.image.at(r - 1, c);
            const double gc = s.image.at(r, c + 1) - s.image.at(r, c - 1);
            const double mag = std::hypot(gr, gc);
            const bool edge = s.labels.at(r, c) != s.labels.at(r + 1, c) ||
                              s.labels.at(r, c) != s.labels.at(r, c + 1);
            (edge ? edge_mag : interior_mag).push_back(mag);
        }
    REQUIRE(!edge_mag.empty());
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / double(v.size());
    };
    // Edges must carry far stronger gradients than region interiors.
    CHECK(mean(edge_mag) > 3.0 * mean(interior_mag));
}

TEST_CASE("generate_corpus is deterministic and sized correctly") {
    const PhantomConfig cfg = small_cfg(23);
    const auto a = generate_corpus(cfg, 1);
    REQUIRE(a.size() == 1);
    CHECK(a[0].subject_id == 0);

    const auto b = generate_corpus(cfg, 4);
    const auto c = generate_corpus(cfg, 4);
    REQUIRE(b.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(b[i].image.data == c[i].image.data);
        CHECK(b[i].labels.labels == c[i].labels.labels);
    }
}

TEST_CASE("corpus round-trips through the directory format") {
    const PhantomConfig cfg = small_cfg(29);
    const auto corpus = generate_corpus(cfg, 3);
    testutil::TempDir td("corpus");
    write_corpus(td.str(), corpus, cfg);

    const auto back = read_corpus(td.str());
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back[i].subject_id == corpus[i].subject_id);
        CHECK(back[i].labels.labels == corpus[i].labels.labels);
        // Images pass through 16-bit quantization.
        REQUIRE(back[i].image.same_shape(corpus[i].image));
        for (std::size_t p = 0; p < back[i].image.data.size(); ++p)
            CHECK(std::fabs(back[i].image.data[p] - corpus[i].image.data[p]) <=
                  1.0 / 65535.0);
    }
}

TEST_CASE("gaussian blur basics") {
    Rng rng(31);
    const Image2D img = testutil::random_image(rng, 12, 12);
    const Image2D same = gaussian_blur(img, 0.0);
    CHECK(same.data == img.data);

    // Blur contracts the value spread.
    const Image2D soft = gaussian_blur(img, 2.0);
    const auto [lo0, hi0] = std::minmax_element(img.data.begin(), img.data.end());
    const auto [lo1, hi1] = std::minmax_element(soft.data.begin(), soft.data.end());
    CHECK(*hi1 - *lo1 < *hi0 - *lo0);

    // Mass is preserved up to border replication effects on a constant image.
    const Image2D flat(9, 9, 0.4);
    const Image2D still = gaussian_blur(flat, 3.0);
    for (double v : still.data) CHECK(v == doctest::Approx(0.4).epsilon(1e-12));

    CHECK_THROWS_AS(gaussian_blur(img, -1.0), ValidationError);
}

TEST_CASE("phantom config validation") {
    PhantomConfig cfg;
    cfg.height = 31;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = PhantomConfig{};
    cfg.n_regions = 1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = PhantomConfig{};
    cfg.deform_smoothness = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = PhantomConfig{};
    CHECK_NOTHROW(cfg.validate());
}
