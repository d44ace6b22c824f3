#include "intenreg/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "intenreg/warp.hpp"

namespace intenreg {

namespace {

std::set<std::int32_t> foreground_labels(const SegmentationMap& seg) {
    std::set<std::int32_t> out;
    for (std::int32_t l : seg.labels)
        if (l != 0) out.insert(l);
    return out;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_matrix_body(std::ostream& os, int n, const std::vector<double>& values,
                       const std::string& tag) {
    os << "# model=" << tag << " n=" << n << "\n";
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j) os << ',';
            os << format_value(values[std::size_t(i) * n + j]);
        }
        os << "\n";
    }
}

}  // namespace

double dice(const SegmentationMap& target_labels, const SegmentationMap& warped_labels,
            std::int32_t label) {
    require_same_shape(target_labels, warped_labels, "dice");
    std::size_t a = 0, b = 0, both = 0;
    for (std::size_t i = 0; i < target_labels.labels.size(); ++i) {
        const bool in_a = target_labels.labels[i] == label;
        const bool in_b = warped_labels.labels[i] == label;
        a += in_a;
        b += in_b;
        both += in_a && in_b;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * double(both) / double(a + b);
}

double mean_dice(const SegmentationMap& target_labels,
                 const SegmentationMap& warped_labels) {
    require_same_shape(target_labels, warped_labels, "mean_dice");
    std::set<std::int32_t> labels = foreground_labels(target_labels);
    labels.merge(foreground_labels(warped_labels));
    if (labels.empty())
        throw DegenerateInputError("mean_dice: no non-background labels in either map");
    double acc = 0.0;
    for (std::int32_t l : labels) acc += dice(target_labels, warped_labels, l);
    return acc / double(labels.size());
}

DiceMatrix pairwise_matrix(const RegistrationEngine& engine,
                           const std::vector<PhantomSample>& samples,
                           const std::string& model_tag,
                           std::vector<PairFailure>* failures, int threads) {
    if (samples.empty()) throw ValidationError("pairwise_matrix: no samples");
    const int n = int(samples.size());
    DiceMatrix m;
    m.n = n;
    m.model_tag = model_tag;
    m.values.assign(std::size_t(n) * n, 0.0);

    const std::size_t cells = std::size_t(n) * n;
    const int workers = std::clamp(threads, 1, int(cells));
    std::vector<std::vector<PairFailure>> worker_failures{std::size_t(workers)};

    auto run_cells = [&](int worker, std::size_t lo, std::size_t hi) {
        for (std::size_t cell = lo; cell < hi; ++cell) {
            const int i = int(cell / std::size_t(n));
            const int j = int(cell % std::size_t(n));
            try {
                const DisplacementField field =
                    engine(samples[std::size_t(i)].image, samples[std::size_t(j)].image);
                const SegmentationMap warped =
                    warp_labels(samples[std::size_t(j)].labels, field);
                m.at(i, j) = mean_dice(samples[std::size_t(i)].labels, warped);
            } catch (const std::exception& e) {
                m.at(i, j) = std::numeric_limits<double>::quiet_NaN();
                worker_failures[std::size_t(worker)].push_back({i, j, e.what()});
            }
        }
    };

    if (workers == 1) {
        run_cells(0, 0, cells);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (cells + std::size_t(workers) - 1) / std::size_t(workers);
        for (int wkr = 0; wkr < workers; ++wkr) {
            const std::size_t lo = std::size_t(wkr) * chunk;
            const std::size_t hi = std::min(cells, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(run_cells, wkr, lo, hi);
        }
        for (auto& t : pool) t.join();
    }

    if (failures)
        for (auto& wf : worker_failures)
            failures->insert(failures->end(), wf.begin(), wf.end());
    return m;
}

DeltaMatrix delta_matrix(const DiceMatrix& a, const DiceMatrix& b) {
    if (a.n != b.n)
        throw DimensionError("delta_matrix: " + std::to_string(a.n) + "x" +
                             std::to_string(a.n) + " vs " + std::to_string(b.n) + "x" +
                             std::to_string(b.n));
    DeltaMatrix d;
    d.n = a.n;
    d.minuend_tag = a.model_tag;
    d.subtrahend_tag = b.model_tag;
    d.values.resize(a.values.size());
    for (std::size_t i = 0; i < a.values.size(); ++i)
        d.values[i] = a.values[i] - b.values[i];
    return d;
}

double mean_intensity_difference(const Image2D& target, const Image2D& warped) {
    require_same_shape(target, warped, "mean_intensity_difference");
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i)
        acc += std::abs(target.data[i] - warped.data[i]);
    return acc / double(target.size());
}

RegionReport region_report(const RegistrationEngine& engine,
                           const std::vector<PhantomSample>& samples) {
    if (samples.empty()) throw ValidationError("region_report: no samples");
    const std::set<std::int32_t> vocab = foreground_labels(samples[0].labels);
    for (const auto& s : samples)
        if (foreground_labels(s.labels) != vocab)
            throw ValidationError("region_report: samples disagree on label vocabulary");
    if (vocab.empty())
        throw DegenerateInputError("region_report: no non-background labels");

    const int n = int(samples.size());
    std::vector<double> acc(vocab.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const DisplacementField field =
                engine(samples[std::size_t(i)].image, samples[std::size_t(j)].image);
            const SegmentationMap warped =
                warp_labels(samples[std::size_t(j)].labels, field);
            std::size_t k = 0;
            for (std::int32_t l : vocab)
                acc[k++] += dice(samples[std::size_t(i)].labels, warped, l);
        }
    }

    RegionReport report;
    std::size_t k = 0;
    for (std::int32_t l : vocab)
        report.entries.push_back({l, acc[k++] / double(std::size_t(n) * n)});
    return report;
}

void write_matrix_csv(const DiceMatrix& m, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    write_matrix_body(f, m.n, m.values, m.model_tag);
    if (!f) throw IoError("short write to " + path);
}

void write_matrix_csv(const DeltaMatrix& m, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    write_matrix_body(f, m.n, m.values, m.minuend_tag + "-" + m.subtrahend_tag);
    if (!f) throw IoError("short write to " + path);
}

void write_region_csv(const RegionReport& r, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f << "label,mean_dice\n";
    for (const auto& e : r.entries)
        f << e.label << ',' << format_value(e.mean_dice) << "\n";
    if (!f) throw IoError("short write to " + path);
}

DiceMatrix read_matrix_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);
    std::string header;
    if (!std::getline(f, header) || header.rfind("# model=", 0) != 0)
        throw ParseError(path + ": missing matrix header");
    const std::size_t n_pos = header.rfind(" n=");
    if (n_pos == std::string::npos) throw ParseError(path + ": header lacks n=");

    DiceMatrix m;
    m.model_tag = header.substr(8, n_pos - 8);
    m.n = std::stoi(header.substr(n_pos + 3));
    if (m.n <= 0) throw ParseError(path + ": non-positive n");
    m.values.reserve(std::size_t(m.n) * m.n);

    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            m.values.push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (m.values.size() != std::size_t(m.n) * m.n)
        throw ParseError(path + ": expected " + std::to_string(std::size_t(m.n) * m.n) +
                         " values, got " + std::to_string(m.values.size()));
    return m;
}

}  // namespace intenreg
