#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "texflow/image.hpp"

namespace texflow {

struct ColorMatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Affine recolor x -> A (x - mu_c) + mu_s.
struct ColorTransform {
    std::array<std::array<double, 3>, 3> A{};
    std::array<double, 3> mu_c{};
    std::array<double, 3> mu_s{};

    void apply(const double* in, double* out) const;
};

// Solves for the transform that maps the content samples' mean and
// covariance onto the style samples' (population statistics,
// A = Cov_S^(1/2) (Cov_C + eps I)^(-1/2) with eps = 1e-8, symmetric square
// roots by eigendecomposition). Inputs are flat RGB triplets; each side
// needs at least 2 samples.
ColorTransform solve_color_match(const std::vector<double>& content_rgb,
                                 const std::vector<double>& style_rgb);

// Pixels of a 3-channel image where the mask is set (all pixels when the
// mask is null), as flat RGB triplets.
std::vector<double> gather_pixels(const ImageGrid& image, const MaskGrid* mask);

// Applies the transform to masked texels; the rest pass through untouched.
// clamp01 bounds the result to [0,1] (disabled for moment verification).
ImageGrid apply_color_match(const ImageGrid& texture, const MaskGrid& mask,
                            const ColorTransform& t, bool clamp01 = true);

} // namespace texflow
