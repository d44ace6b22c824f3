#include "intenreg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "intenreg/image_io.hpp"
#include "intenreg/rng.hpp"
#include "intenreg/warp.hpp"

namespace intenreg {

namespace {

// Low-frequency radial wobble so the nested regions are not plain ellipses.
struct Boundary {
    double radius_r, radius_c;        // ellipse semi-axes in pixels
    double amp[3], phase[3];          // harmonics m = 2, 3, 4

    // Signed inclusion test: <= 1 means inside.
    double rho(double dr, double dc) const {
        const double base = std::sqrt((dr / radius_r) * (dr / radius_r) +
                                      (dc / radius_c) * (dc / radius_c));
        const double theta = std::atan2(dr, dc);
        double wobble = 0.0;
        for (int m = 0; m < 3; ++m)
            wobble += amp[m] * std::cos(double(m + 2) * theta + phase[m]);
        return base / (1.0 + wobble);
    }
};

// Anatomy shared by every subject of a config: nested perturbed ellipses,
// outermost first. Drawn from the config seed only.
std::vector<Boundary> make_anatomy(const PhantomConfig& cfg) {
    Rng rng(mix_seed(cfg.seed, 0x414e41544f4d59ull));  // anatomy stream
    const int k = cfg.n_regions - 1;
    const double base_r = 0.42 * cfg.height;
    const double base_c = 0.42 * cfg.width;

    std::vector<Boundary> bounds{std::size_t(k)};
    for (int i = 0; i < k; ++i) {
        // Radius ladder from the full extent down to a small core.
        const double f = k == 1 ? 1.0 : 1.0 - 0.72 * double(i) / double(k - 1);
        const double squish = rng.uniform(-0.08, 0.08);
        Boundary& b = bounds[std::size_t(i)];
        b.radius_r = base_r * f * (1.0 + squish);
        b.radius_c = base_c * f * (1.0 - squish);
        for (int m = 0; m < 3; ++m) {
            b.amp[m] = rng.uniform(-0.06, 0.06);
            b.phase[m] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
    }
    return bounds;
}

SegmentationMap rasterize(const PhantomConfig& cfg, const std::vector<Boundary>& bounds) {
    SegmentationMap seg(cfg.height, cfg.width, 0);
    const double cr = 0.5 * (cfg.height - 1);
    const double cc = 0.5 * (cfg.width - 1);
    for (int r = 0; r < cfg.height; ++r) {
        for (int c = 0; c < cfg.width; ++c) {
            const double dr = r - cr, dc = c - cc;
            // Deepest containing boundary wins.
            int label = 0;
            for (std::size_t i = 0; i < bounds.size(); ++i)
                if (bounds[i].rho(dr, dc) <= 1.0) label = int(i) + 1;
            seg.at(r, c) = label;
        }
    }
    return seg;
}

std::vector<double> intensity_ladder(int n_fg) {
    if (n_fg == 4) return {0.25, 0.55, 0.75, 0.9};
    std::vector<double> v(std::size_t(n_fg), 0.0);
    for (int i = 0; i < n_fg; ++i)
        v[std::size_t(i)] = n_fg == 1 ? 0.55 : 0.25 + (0.9 - 0.25) * double(i) / double(n_fg - 1);
    return v;
}

DisplacementField random_smooth_field(const PhantomConfig& cfg, Rng& rng) {
    DisplacementField f(cfg.height, cfg.width);
    if (cfg.deform_amplitude <= 0.0) return f;

    Image2D wr(cfg.height, cfg.width), wc(cfg.height, cfg.width);
    for (auto& v : wr.data) v = rng.normal();
    for (auto& v : wc.data) v = rng.normal();
    wr = gaussian_blur(wr, cfg.deform_smoothness);
    wc = gaussian_blur(wc, cfg.deform_smoothness);

    double max_mag = 0.0;
    for (std::size_t i = 0; i < wr.data.size(); ++i)
        max_mag = std::max(max_mag, std::hypot(wr.data[i], wc.data[i]));
    const double scale = max_mag > 0.0 ? cfg.deform_amplitude / max_mag : 0.0;
    for (std::size_t i = 0; i < wr.data.size(); ++i) {
        f.u_row[i] = scale * wr.data[i];
        f.u_col[i] = scale * wc.data[i];
    }
    return f;
}

bool all_labels_present(const SegmentationMap& seg, int n_regions) {
    std::vector<char> seen(std::size_t(n_regions), 0);
    for (std::int32_t l : seg.labels) {
        if (l < 0 || l >= n_regions) return false;
        seen[std::size_t(l)] = 1;
    }
    return std::all_of(seen.begin(), seen.end(), [](char s) { return s != 0; });
}

}  // namespace

void PhantomConfig::validate() const {
    if (height < 8 || width < 8 || height % 2 != 0 || width % 2 != 0)
        throw ValidationError("PhantomConfig: height/width must be even and >= 8, got " +
                              std::to_string(height) + "x" + std::to_string(width));
    if (n_regions < 2) throw ValidationError("PhantomConfig: n_regions must be >= 2");
    if (intensity_jitter < 0) throw ValidationError("PhantomConfig: intensity_jitter < 0");
    if (deform_amplitude < 0) throw ValidationError("PhantomConfig: deform_amplitude < 0");
    if (!(deform_smoothness > 0))
        throw ValidationError("PhantomConfig: deform_smoothness must be > 0");
    if (noise_sigma < 0) throw ValidationError("PhantomConfig: noise_sigma < 0");
}

Image2D gaussian_blur(const Image2D& img, double sigma) {
    if (sigma < 0) throw ValidationError("gaussian_blur: sigma must be >= 0");
    if (sigma == 0.0) return img;

    const int radius = std::max(1, int(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(std::size_t(2 * radius + 1));
    double norm = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[std::size_t(i + radius)] = std::exp(-0.5 * double(i) * i / (sigma * sigma));
        norm += kernel[std::size_t(i + radius)];
    }
    for (auto& k : kernel) k /= norm;

    const int h = img.height, w = img.width;
    Image2D tmp(h, w), out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[std::size_t(i + radius)] *
                       img.at(r, std::clamp(c + i, 0, w - 1));
            tmp.at(r, c) = acc;
        }
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[std::size_t(i + radius)] *
                       tmp.at(std::clamp(r + i, 0, h - 1), c);
            out.at(r, c) = acc;
        }
    return out;
}

PhantomSample generate_subject(const PhantomConfig& cfg, int subject_id) {
    cfg.validate();
    const std::vector<Boundary> anatomy = make_anatomy(cfg);
    const SegmentationMap canon_seg = rasterize(cfg, anatomy);
    const std::vector<double> ladder = intensity_ladder(cfg.n_regions - 1);

    for (int attempt = 0; attempt < 10; ++attempt) {
        Rng rng(mix_seed(mix_seed(cfg.seed, std::uint64_t(std::int64_t(subject_id))),
                         0x53554244ull + std::uint64_t(attempt)));

        // Per-subject region shades.
        std::vector<double> shades(std::size_t(cfg.n_regions));
        shades[0] = 0.02;
        for (int i = 1; i < cfg.n_regions; ++i)
            shades[std::size_t(i)] = std::clamp(
                ladder[std::size_t(i - 1)] +
                    rng.uniform(-cfg.intensity_jitter, cfg.intensity_jitter),
                0.0, 1.0);

        Image2D ideal(cfg.height, cfg.width);
        for (std::size_t i = 0; i < ideal.data.size(); ++i)
            ideal.data[i] = shades[std::size_t(canon_seg.labels[i])];
        // A touch of softening keeps the intensity steps differentiable
        // enough for gradient-based registration to get traction.
        ideal = gaussian_blur(ideal, 0.8);

        const DisplacementField field = random_smooth_field(cfg, rng);

        PhantomSample s;
        s.subject_id = subject_id;
        s.image = warp(ideal, field);
        s.labels = warp_labels(canon_seg, field);

        if (cfg.noise_sigma > 0.0)
            for (auto& v : s.image.data) v += rng.normal(0.0, cfg.noise_sigma);
        for (auto& v : s.image.data) v = std::clamp(v, 0.0, 1.0);

        if (all_labels_present(s.labels, cfg.n_regions)) return s;
        // A region was warped out of existence: redraw this subject.
    }
    throw DegenerateInputError("generate_subject: region collapsed in 10 consecutive draws "
                               "(subject " + std::to_string(subject_id) + ")");
}

std::vector<PhantomSample> generate_corpus(const PhantomConfig& cfg, int n_subjects) {
    if (n_subjects < 1) throw ValidationError("generate_corpus: n_subjects must be >= 1");
    std::vector<PhantomSample> out;
    out.reserve(std::size_t(n_subjects));
    for (int id = 0; id < n_subjects; ++id) out.push_back(generate_subject(cfg, id));
    return out;
}

void write_corpus(const std::string& dir, const std::vector<PhantomSample>& samples,
                  const PhantomConfig& cfg) {
    std::filesystem::create_directories(dir);
    std::ostringstream manifest;
    manifest << "phantom corpus\n";
    manifest << "height " << cfg.height << "\nwidth " << cfg.width << "\n";
    manifest << "n_regions " << cfg.n_regions << "\n";
    manifest << "intensity_jitter " << cfg.intensity_jitter << "\n";
    manifest << "deform_amplitude " << cfg.deform_amplitude << "\n";
    manifest << "deform_smoothness " << cfg.deform_smoothness << "\n";
    manifest << "noise_sigma " << cfg.noise_sigma << "\n";
    manifest << "seed " << cfg.seed << "\n";
    manifest << "subjects";
    for (const auto& s : samples) manifest << ' ' << s.subject_id;
    manifest << "\n";

    for (const auto& s : samples) {
        const std::string stem = dir + "/subject_" + std::to_string(s.subject_id);
        write_image(s.image, stem + "_img.pgm");
        write_labels(s.labels, stem + "_seg.pgm");
    }
    std::ofstream f(dir + "/manifest.txt", std::ios::trunc);
    if (!f) throw IoError("cannot write manifest in " + dir);
    f << manifest.str();
}

std::vector<PhantomSample> read_corpus(const std::string& dir) {
    std::ifstream f(dir + "/manifest.txt");
    if (!f) throw IoError("cannot open manifest in " + dir);
    std::vector<int> ids;
    std::string line;
    while (std::getline(f, line)) {
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "subjects") {
            int id;
            while (ss >> id) ids.push_back(id);
        }
    }
    if (ids.empty()) throw ParseError("manifest in " + dir + " lists no subjects");

    std::vector<PhantomSample> out;
    out.reserve(ids.size());
    for (int id : ids) {
        const std::string stem = dir + "/subject_" + std::to_string(id);
        PhantomSample s;
        s.subject_id = id;
        s.image = read_image(stem + "_img.pgm");
        s.labels = read_labels(stem + "_seg.pgm");
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace intenreg
