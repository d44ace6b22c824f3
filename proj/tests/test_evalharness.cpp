#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>

#include "intenreg/engine.hpp"
#include "intenreg/errors.hpp"
#include "intenreg/evalharness.hpp"
#include "intenreg/phantom.hpp"
#include "intenreg/rng.hpp"
#include "intenreg/warp.hpp"
#include "testutil.hpp"

using namespace intenreg;

namespace {

// Explicit pixel-set oracle for dice.
double dice_reference(const SegmentationMap& a, const SegmentationMap& b,
                      std::int32_t label) {
    std::set<std::size_t> sa, sb;
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        if (a.labels[i] == label) sa.insert(i);
        if (b.labels[i] == label) sb.insert(i);
    }
    if (sa.empty() && sb.empty()) return 1.0;
    std::size_t inter = 0;
    for (auto i : sa) inter += sb.count(i);
    return 2.0 * double(inter) / double(sa.size() + sb.size());
}

SegmentationMap random_map(Rng& rng, int h, int w, int n_labels) {
    SegmentationMap m(h, w);
    for (auto& v : m.labels) v = std::int32_t(rng.next_below(std::uint64_t(n_labels)));
    return m;
}

std::vector<PhantomSample> tiny_corpus(std::uint64_t seed, int n) {
    PhantomConfig cfg;
    cfg.height = 32;
    cfg.width = 32;
    cfg.seed = seed;
    return generate_corpus(cfg, n);
}

}  // namespace

TEST_CASE("dice identities and hand case") {
    Rng rng(1);
    const SegmentationMap m = random_map(rng, 6, 6, 4);
    for (std::int32_t lbl = 0; lbl < 4; ++lbl) CHECK(dice(m, m, lbl) == 1.0);

    // Disjoint: label 1 occupies different halves.
    SegmentationMap a(2, 2), b(2, 2);
    a.at(0, 0) = 1;
    b.at(1, 1) = 1;
    CHECK(dice(a, b, 1) == 0.0);

    // |A| = 6, |B| = 4, overlap 3 -> 2*3/10.
    SegmentationMap t(4, 4), w(4, 4);
    for (int i = 0; i < 6; ++i) t.labels[std::size_t(i)] = 7;
    for (int i = 3; i < 7; ++i) w.labels[std::size_t(i)] = 7;
    CHECK(dice(t, w, 7) == doctest::Approx(0.6));

    // Absent from both maps scores 1.
    CHECK(dice(t, w, 99) == 1.0);

    CHECK_THROWS_AS(dice(SegmentationMap(2, 2), SegmentationMap(2, 3), 1),
                    DimensionError);
}

TEST_CASE("dice agrees exactly with the pixel-set oracle") {
    Rng rng(2);
    for (int inst = 0; inst < 25; ++inst) {
        const int h = 3 + int(rng.next_below(10));
        const int w = 3 + int(rng.next_below(10));
        const SegmentationMap a = random_map(rng, h, w, 5);
        const SegmentationMap b = random_map(rng, h, w, 5);
        for (std::int32_t lbl = 0; lbl < 5; ++lbl)
            CHECK(dice(a, b, lbl) == dice_reference(a, b, lbl));
    }
}

TEST_CASE("mean_dice averages over labels present in either map") {
    // Label 1 perfect, label 2 dice 0.6, label 3 absent from both (excluded).
    SegmentationMap t(4, 4), w(4, 4);
    t.at(0, 0) = 1;
    w.at(0, 0) = 1;
    for (int i = 4; i < 10; ++i) t.labels[std::size_t(i)] = 2;
    for (int i = 7; i < 11; ++i) w.labels[std::size_t(i)] = 2;
    CHECK(mean_dice(t, w) == doctest::Approx(0.8));
    CHECK(mean_dice(t, w) == mean_dice(w, t));

    // One-sided label drags the mean down.
    SegmentationMap x(2, 2), y(2, 2);
    x.at(0, 0) = 1;
    x.at(0, 1) = 2;
    y.at(0, 0) = 1;
    CHECK(mean_dice(x, y) == doctest::Approx(0.5));

    CHECK(mean_dice(SegmentationMap(3, 3), SegmentationMap(3, 3)) == 1.0);
}

TEST_CASE("mean_dice with no foreground anywhere is degenerate") {
    SegmentationMap a(3, 3), b(3, 3);
    a.labels.assign(9, 0);
    b.labels.assign(9, 0);
    // Both all-background: vacuous perfect agreement... except there is
    // nothing to score, which the contract treats as degenerate input.
    bool threw = false;
    try {
        mean_dice(a, b);
    } catch (const DegenerateInputError&) {
        threw = true;
    }
    CHECK((threw || mean_dice(a, b) == 1.0));
}

TEST_CASE("pairwise matrix with the identity engine equals raw pairwise dice") {
    const auto samples = tiny_corpus(3, 4);
    const DiceMatrix m = pairwise_matrix(make_identity_engine(), samples, "identity");
    REQUIRE(m.n == 4);
    CHECK(m.model_tag == "identity");
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(m.at(i, j) == mean_dice(samples[std::size_t(i)].labels,
                                          samples[std::size_t(j)].labels));
    for (int i = 0; i < 4; ++i) CHECK(m.at(i, i) == 1.0);
}

TEST_CASE("single-sample matrix is 1x1 and near-perfect") {
    const auto samples = tiny_corpus(5, 1);
    AdamState adam;
    adam.lr = 0.25;
    StopRule stop;
    stop.max_iters = 60;
    const DiceMatrix m =
        pairwise_matrix(make_direct_engine(LossConfig{}, adam, stop), samples, "direct");
    REQUIRE(m.n == 1);
    CHECK(m.at(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pairwise matrix is identical for any worker count") {
    const auto samples = tiny_corpus(7, 4);
    AdamState adam;
    adam.lr = 0.25;
    StopRule stop;
    stop.max_iters = 30;
    const RegistrationEngine engine = make_direct_engine(LossConfig{}, adam, stop);
    const DiceMatrix seq = pairwise_matrix(engine, samples, "d", nullptr, 1);
    const DiceMatrix par = pairwise_matrix(engine, samples, "d", nullptr, 3);
    CHECK(seq.values == par.values);
}

TEST_CASE("a throwing engine records NaN and a failure report") {
    const auto samples = tiny_corpus(9, 3);
    int calls = 0;
    const RegistrationEngine flaky = [&calls](const Image2D& t,
                                              const Image2D& s) -> DisplacementField {
        ++calls;
        if (calls == 5) throw DivergenceError("synthetic blowup", 2);
        return DisplacementField(t.height, s.width);
    };
    std::vector<PairFailure> failures;
    const DiceMatrix m = pairwise_matrix(flaky, samples, "flaky", &failures);
    REQUIRE(failures.size() == 1);
    const int fi = failures[0].target, fj = failures[0].source;
    CHECK(std::isnan(m.at(fi, fj)));
    CHECK(failures[0].reason.find("blowup") != std::string::npos);
    int nan_count = 0;
    for (double v : m.values) nan_count += std::isnan(v) ? 1 : 0;
    CHECK(nan_count == 1);
}

TEST_CASE("delta matrix identities") {
    const auto samples = tiny_corpus(11, 3);
    const DiceMatrix a = pairwise_matrix(make_identity_engine(), samples, "a");
    const DeltaMatrix zero = delta_matrix(a, a);
    for (double v : zero.values) CHECK(v == 0.0);

    DiceMatrix b = a;
    b.model_tag = "b";
    b.at(0, 1) += 0.25;
    b.at(2, 2) -= 0.5;
    const DeltaMatrix ab = delta_matrix(a, b);
    const DeltaMatrix ba = delta_matrix(b, a);
    for (std::size_t i = 0; i < ab.values.size(); ++i)
        CHECK(ab.values[i] == -ba.values[i]);
    CHECK(ab.minuend_tag == "a");
    CHECK(ab.subtrahend_tag == "b");

    DiceMatrix hand_a, hand_b;
    hand_a.n = hand_b.n = 2;
    hand_a.values = {1.0, 0.5, 0.25, 0.0};
    hand_b.values = {0.5, 0.5, 0.5, 0.5};
    const DeltaMatrix d = delta_matrix(hand_a, hand_b);
    CHECK(d.values == std::vector<double>{0.5, 0.0, -0.25, -0.5});

    DiceMatrix small;
    small.n = 1;
    small.values = {1.0};
    CHECK_THROWS_AS(delta_matrix(hand_a, small), DimensionError);
}

TEST_CASE("mean intensity difference") {
    Rng rng(13);
    const Image2D img = testutil::random_image(rng, 8, 8);
    CHECK(mean_intensity_difference(img, img) == 0.0);
    CHECK(mean_intensity_difference(img, warp(img, DisplacementField(8, 8))) == 0.0);

    Image2D t(1, 2), w(1, 2);
    t.at(0, 0) = 0;
    t.at(0, 1) = 1;
    w.at(0, 0) = 1;
    w.at(0, 1) = 1;
    CHECK(mean_intensity_difference(t, w) == doctest::Approx(0.5));

    const Image2D other = testutil::random_image(rng, 8, 8);
    const double v = mean_intensity_difference(img, other);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);

    CHECK_THROWS_AS(mean_intensity_difference(Image2D(2, 2), Image2D(2, 3)),
                    DimensionError);
}

TEST_CASE("region report on a degenerate corpus scores every region 1") {
    PhantomConfig cfg;
    cfg.height = 32;
    cfg.width = 32;
    cfg.seed = 15;
    cfg.deform_amplitude = 0.0;
    cfg.intensity_jitter = 0.0;
    cfg.noise_sigma = 0.0;
    const auto samples = generate_corpus(cfg, 3);
    const RegionReport rep = region_report(make_identity_engine(), samples);
    REQUIRE(int(rep.entries.size()) == cfg.n_regions - 1);
    for (const auto& e : rep.entries) CHECK(e.mean_dice == 1.0);
}

TEST_CASE("region means reconcile with the pairwise matrix mean") {
    // When every label appears in every sample, the label-mean of the
    // region report equals the mean over all matrix cells.
    const auto samples = tiny_corpus(17, 3);
    const RegionReport rep = region_report(make_identity_engine(), samples);
    const DiceMatrix m = pairwise_matrix(make_identity_engine(), samples, "id");

    double label_mean = 0;
    for (const auto& e : rep.entries) label_mean += e.mean_dice;
    label_mean /= double(rep.entries.size());

    double cell_mean = 0;
    for (double v : m.values) cell_mean += v;
    cell_mean /= double(m.values.size());

    CHECK(label_mean == doctest::Approx(cell_mean).epsilon(1e-12));
}

TEST_CASE("region report rejects inconsistent vocabularies") {
    auto samples = tiny_corpus(19, 2);
    for (auto& v : samples[1].labels.labels)
        if (v == 4) v = 3;  // drop label 4 from the second sample
    CHECK_THROWS_AS(region_report(make_identity_engine(), samples), ValidationError);
}

TEST_CASE("matrix csv round-trips at full precision") {
    const auto samples = tiny_corpus(21, 3);
    DiceMatrix m = pairwise_matrix(make_identity_engine(), samples, "roundtrip");
    m.at(1, 2) = 0.1234567890123456789;
    m.at(2, 0) = std::nan("");

    testutil::TempDir td("csv");
    write_matrix_csv(m, td.file("m.csv"));
    const DiceMatrix back = read_matrix_csv(td.file("m.csv"));
    CHECK(back.model_tag == "roundtrip");
    REQUIRE(back.n == 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (std::isnan(m.at(i, j)))
                CHECK(std::isnan(back.at(i, j)));
            else
                CHECK(back.at(i, j) == m.at(i, j));
        }

    // Header format is part of the contract.
    std::ifstream f(td.file("m.csv"));
    std::string header;
    std::getline(f, header);
    CHECK(header == "# model=roundtrip n=3");
}

TEST_CASE("region csv has one row per label") {
    const auto samples = tiny_corpus(23, 2);
    const RegionReport rep = region_report(make_identity_engine(), samples);
    testutil::TempDir td("csv");
    write_region_csv(rep, td.file("r.csv"));

    std::ifstream f(td.file("r.csv"));
    std::string line;
    std::getline(f, line);
    CHECK(line == "label,mean_dice");
    int rows = 0;
    while (std::getline(f, line))
        if (!line.empty()) ++rows;
    CHECK(rows == int(rep.entries.size()));
}
