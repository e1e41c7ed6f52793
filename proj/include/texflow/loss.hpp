#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "texflow/dictionary.hpp"
#include "texflow/flowfield.hpp"
#include "texflow/hypercolumn.hpp"
#include "texflow/image.hpp"

namespace texflow {

struct LossError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 1 - a.b/(|a||b|); either norm below 1e-12 makes the distance 1.
double cosine_distance(const double* a, const double* b, int dim);
double cosine_distance(const std::vector<double>& a, const std::vector<double>& b);

// Concatenated per-layer means as one hypercolumn-length vector.
std::vector<double> flatten_means(const std::vector<std::vector<double>>& layer_means);

// Mean over fr of the minimum cosine distance to fs (ties -> lowest index).
// Both lists are flat [count * dim]; fs must be non-empty.
double nnfm_basic(const std::vector<double>& fr, const std::vector<double>& fs, int dim);

// Result of the directional style loss on one rendered hypercolumn grid.
// Gradient layout matches HypercolumnMap::data; it already includes the
// dependence of the recomputed rendered means on every included cell.
struct DirectionalResult {
    double loss = 0.0;
    size_t included = 0;         // N in the mean
    size_t empty_bin_events = 0; // cells rerouted to a circularly nearest bin
    std::vector<double> grad;
    // per grid cell; -1 where the cell was skipped (excluded marker)
    std::vector<int32_t> matched_bin;
    std::vector<int64_t> matched_index; // bin-local
    std::vector<int32_t> matched_region;
};

// Per-cell nearest-neighbor search restricted to the cell's orientation bin
// of its region's dictionary. Rendered features are centered by per-layer
// means recomputed over the included cells; dictionary vectors are stored
// centered already. Empty target bins fall back to the circularly nearest
// non-empty bin (ties -> lower index) and are counted. Matched indices are
// constants of the gradient.
DirectionalResult nnfm_directional(const HypercolumnMap& fr,
                                   const AngleSetImage& r_alpha,
                                   const std::vector<const RotatedStyleDictionary*>& dicts,
                                   const std::vector<int32_t>* region_of_cell = nullptr);

// Single nearest-neighbor search over mean-centered hypercolumns: rendered
// features centered by their own recomputed means, style features by mu_s.
// Implemented as the one-bin case of the directional search.
double nnfm_hypercolumn(const HypercolumnMap& fr, const std::vector<double>& fs,
                        const std::vector<std::vector<double>>& mu_s);

struct TvResult {
    double value = 0.0;
    ImageGrid grad;
};

// Mean of squared differences over channel entries of horizontally and
// vertically adjacent pixel pairs where both pixels are foreground. No
// qualifying pairs -> 0.
TvResult tv_loss(const ImageGrid& image, const MaskGrid& foreground);

inline double total_loss(double nnfm, double tv, double lambda) {
    return nnfm + lambda * tv;
}

// One evaluation's bookkeeping, surfaced per iteration by the optimizer.
struct LossReport {
    double nnfm = 0.0, tv = 0.0, total = 0.0;
    size_t included_cells = 0;
    size_t empty_bin_events = 0;
    std::vector<int32_t> matched_bin;
    std::vector<int64_t> matched_index;
    std::vector<int32_t> matched_region;
};

} // namespace texflow
