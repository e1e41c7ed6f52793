#pragma once

#include <vector>

#include "texflow/extractor.hpp"
#include "texflow/flowfield.hpp"
#include "texflow/image.hpp"
#include "texflow/raster.hpp"

namespace texflow {

// Per-cell concatenation of all tap layers resized to a common (W/d, H/d)
// grid, with the per-layer means recorded alongside.
struct HypercolumnMap {
    int width = 0, height = 0;
    int dim = 0;
    std::vector<int> layer_channels;
    std::vector<int> layer_offsets;
    std::vector<std::vector<double>> layer_means; // over the full grid
    std::vector<double> data;                     // width*height*dim

    const double* cell(int x, int y) const {
        return &data[(static_cast<size_t>(y) * width + x) * dim];
    }
    double* cell(int x, int y) {
        return &data[(static_cast<size_t>(y) * width + x) * dim];
    }
    size_t cells() const { return static_cast<size_t>(width) * height; }

    // Means over a cell subset (include != nullptr) or the full grid.
    std::vector<std::vector<double>> means_over(const std::vector<uint8_t>* include) const;
};

// Bilinear resize of every tap to (W/d, H/d) and channel-wise concatenation.
// d must be a positive factor with W/d, H/d >= 1.
HypercolumnMap downsample_features(const FeatureMaps& maps, int d);

// Adjoint: splits per-cell hypercolumn gradients back into per-tap tensors
// at their native resolutions.
std::vector<Tensor> downsample_features_adjoint(const HypercolumnMap& hc,
                                                const std::vector<double>& cell_grads,
                                                const FeatureMaps& maps, int d);

struct RotatedImage {
    ImageGrid image;
    MaskGrid valid; // false where the source read fell outside the image
};

// Rotation about the image center onto a same-sized canvas. Angle follows
// the orientation convention of DirectionField: content at orientation theta
// exhibits orientation theta + angle afterwards.
RotatedImage rotate_image(const ImageGrid& image, double angle_deg, Filter filter);

// Nearest-filtered rotation of a bin image; out-of-bounds reads and excluded
// sources stay excluded.
AngleSetImage rotate_bins(const AngleSetImage& bins, double angle_deg);

// Pixel under the center of grid cell c when `cells` cells span `pixels`
// pixels (nearest sampling for per-cell lookups on full-resolution grids).
inline int cell_to_pixel(int c, int cells, int pixels) {
    double s = (c + 0.5) * static_cast<double>(pixels) / cells;
    int p = static_cast<int>(s);
    return p < pixels ? p : pixels - 1;
}

} // namespace texflow
