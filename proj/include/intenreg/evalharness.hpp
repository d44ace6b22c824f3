#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "intenreg/engine.hpp"
#include "intenreg/image.hpp"
#include "intenreg/phantom.hpp"

namespace intenreg {

struct DiceMatrix {
    int n = 0;
    std::vector<double> values;  // n*n row-major; entry (i,j) = source j onto target i
    std::string model_tag;

    double at(int i, int j) const { return values[std::size_t(i) * n + j]; }
    double& at(int i, int j) { return values[std::size_t(i) * n + j]; }
};

struct DeltaMatrix {
    int n = 0;
    std::vector<double> values;
    std::string minuend_tag;
    std::string subtrahend_tag;

    double at(int i, int j) const { return values[std::size_t(i) * n + j]; }
};

struct RegionEntry {
    std::int32_t label = 0;
    double mean_dice = 0.0;
};

struct RegionReport {
    std::vector<RegionEntry> entries;  // one per non-background label, ascending
};

struct PairFailure {
    int target = 0;
    int source = 0;
    std::string reason;
};

// Sorensen-Dice for one label's pixel sets; 1 when the label is absent
// from both maps.
double dice(const SegmentationMap& target_labels, const SegmentationMap& warped_labels,
            std::int32_t label);

// Unweighted mean of per-label dice over the non-background labels present
// in either map (a label missing from one side scores whatever dice gives
// it, typically 0). Throws DegenerateInputError when neither map has any
// non-background label.
double mean_dice(const SegmentationMap& target_labels, const SegmentationMap& warped_labels);

// Registers every ordered (target i, source j) pair, diagonal included.
// A throwing engine records NaN at that cell and a PairFailure entry;
// the matrix shape never changes. Cells are independent, so more than one
// worker thread may be used; results land by index and are identical for
// any thread count.
DiceMatrix pairwise_matrix(const RegistrationEngine& engine,
                           const std::vector<PhantomSample>& samples,
                           const std::string& model_tag,
                           std::vector<PairFailure>* failures = nullptr,
                           int threads = 1);

DeltaMatrix delta_matrix(const DiceMatrix& a, const DiceMatrix& b);

// Mean absolute intensity difference.
double mean_intensity_difference(const Image2D& target, const Image2D& warped);

// Per-label mean dice over all ordered pairs. All samples must carry the
// same label vocabulary.
RegionReport region_report(const RegistrationEngine& engine,
                           const std::vector<PhantomSample>& samples);

// CSV: one `# model=<tag> n=<n>` header line, then n rows of n values at
// 17 significant digits.
void write_matrix_csv(const DiceMatrix& m, const std::string& path);
void write_matrix_csv(const DeltaMatrix& m, const std::string& path);
void write_region_csv(const RegionReport& r, const std::string& path);

// Round-trip reader for the matrix CSV format (tag from the header).
DiceMatrix read_matrix_csv(const std::string& path);

}  // namespace intenreg
