#pragma once

#include <optional>
#include <string>
#include <vector>

#include "texflow/extractor.hpp"
#include "texflow/flowfield.hpp"
#include "texflow/hypercolumn.hpp"
#include "texflow/image.hpp"

namespace texflow {

// Mean-centered style hypercolumns grouped by orientation bin. Bin alpha
// holds features that exhibit orientation alpha*tau_step in image space,
// collected from rotated copies of the style image.
class RotatedStyleDictionary {
public:
    RotatedStyleDictionary() = default;
    RotatedStyleDictionary(double tau_step, int dim)
        : tau_step_(tau_step), bins_(bin_count(tau_step)), dim_(dim),
          features_(static_cast<size_t>(bins_)) {}

    double tau_step() const { return tau_step_; }
    int bins() const { return bins_; }
    int dim() const { return dim_; }
    int region_id = 0;

    // per layer, per channel; the means used to center every stored vector
    std::vector<std::vector<double>> layer_means;

    size_t bin_size(int b) const { return features_[b].size() / dim_; }
    const double* bin_feature(int b, size_t i) const {
        return &features_[b][i * dim_];
    }
    const std::vector<double>& bin_data(int b) const { return features_[b]; }

    void append(int b, const double* vec) {
        features_[b].insert(features_[b].end(), vec, vec + dim_);
    }

    size_t total_features() const;
    bool usable() const { return total_features() > 0; }

    // serialized cache; load returns nullopt for a missing or foreign file
    void save(const std::string& path) const;
    static std::optional<RotatedStyleDictionary> load(const std::string& path);

private:
    double tau_step_ = 5.0;
    int bins_ = 0;
    int dim_ = 0;
    std::vector<std::vector<double>> features_; // flattened centered vectors
};

// Builds the dictionary: ETF of the grayscale style -> orientation bins,
// then one feature pass per rotation angle r in {0, tau, ..., 180-tau}.
// Features of a cell whose (rotated) bin is beta are stored -- centered by
// the unrotated pass's per-layer means -- into bin (beta + r/tau) mod B.
// Cells outside the rotated image footprint, or where the rotated partial
// mask falls below 0.5 after downsampling, are dropped.
RotatedStyleDictionary build_style_dictionary(const ImageGrid& style,
                                              const ImageGrid* partial_mask,
                                              double tau_step,
                                              const EtfParams& etf_params,
                                              Extractor& extractor, int d);

// Content key over everything the dictionary depends on (style pixels, mask,
// extractor weights and spec, tau_step, ETF parameters, downsample factor).
uint64_t dictionary_content_key(const ImageGrid& style, const ImageGrid* partial_mask,
                                const Extractor& extractor, double tau_step,
                                const EtfParams& etf_params, int d);

} // namespace texflow
