#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "texflow/image.hpp"

namespace texflow {

struct FlowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-pixel orientation theta in [0, pi) with a non-negative magnitude.
struct DirectionField {
    int width = 0, height = 0;
    std::vector<double> angle;
    std::vector<double> magnitude;

    DirectionField() = default;
    DirectionField(int w, int h)
        : width(w), height(h),
          angle(static_cast<size_t>(w) * h, 0.0),
          magnitude(static_cast<size_t>(w) * h, 0.0) {}

    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

struct EtfParams {
    int kernel_radius = 10;
    int iterations = 10;
};

// Orientations discretized into B = 180/tau_step bins. Bin 0 is centered on
// 0 degrees: it covers [180-tau/2, 180) U [0, tau/2). Excluded pixels
// (background) carry kExcluded.
class AngleSetImage {
public:
    static constexpr int16_t kExcluded = -1;

    AngleSetImage() = default;
    AngleSetImage(int w, int h, double tau_step);

    int width() const { return width_; }
    int height() const { return height_; }
    int bins() const { return bins_; }
    double tau_step() const { return tau_step_; }

    int16_t bin(int x, int y) const { return bin_[idx(x, y)]; }
    void set_bin(int x, int y, int16_t b) { bin_[idx(x, y)] = b; }
    bool excluded(int x, int y) const { return bin_[idx(x, y)] == kExcluded; }

private:
    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width_ + x; }
    int width_ = 0, height_ = 0, bins_ = 0;
    double tau_step_ = 5.0;
    std::vector<int16_t> bin_;
};

// Bin of an orientation in radians; bins wrap so bin(theta) == bin(theta+pi).
int angle_bin(double theta_radians, double tau_step_deg);
int bin_count(double tau_step_deg);
// Center angle of a bin, radians in [0, pi).
double bin_center(int bin, double tau_step_deg);

// Sobel gradient with reflected borders. The reported angle is the tangent
// (perpendicular to the gradient) folded into [0, pi); zero-magnitude pixels
// get angle 0.
DirectionField image_gradient(const ImageGrid& gray);

// Edge tangent flow: the tangent field of image_gradient smoothed by
// `iterations` passes over a box neighborhood of the given radius, weighted
// by magnitude difference (tanh), direction agreement (|cos|) and a sign
// flip for opposing tangents.
DirectionField etf(const ImageGrid& gray, const EtfParams& params);

// Exact Euclidean distance (in pixels) to the nearest pixel with value
// >= 0.5. Throws FlowError when no such pixel exists.
ImageGrid edge_distance(const ImageGrid& binary);

// Requires tau_step to divide 180.
AngleSetImage discretize_angles(const DirectionField& field, double tau_step);

struct ContourField {
    AngleSetImage bins;       // background pixels are kExcluded
    DirectionField direction; // the continuous ETF of the distance image
    ImageGrid distance;       // distance to the nearest guidance line
};

// Guidance pipeline for one rendered view: binarize the contour render,
// build the edge-distance image, run ETF on it and discretize. With
// dark_lines (the default) pixels < 0.5 are the guidance lines; background
// pixels never count as lines and are excluded from the output bins.
ContourField contour_direction_field(const ImageGrid& rendered_contours,
                                     const MaskGrid& foreground,
                                     const EtfParams& params, double tau_step,
                                     bool dark_lines = true);

// HSV visualization (hue = 2*theta, value = magnitude / max magnitude),
// converted to RGB.
ImageGrid direction_field_debug_image(const DirectionField& field);

} // namespace texflow
