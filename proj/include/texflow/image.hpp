#pragma once

#include <cstdint>
#include <vector>

namespace texflow {

// Row-major H x W x C grid of real scalars. Textures, renders and style
// images live in [0,1] at I/O boundaries; intermediate optimization values
// may exceed the range.
class ImageGrid {
public:
    ImageGrid() = default;
    ImageGrid(int width, int height, int channels, double fill = 0.0)
        : width_(width), height_(height), channels_(channels),
          data_(static_cast<size_t>(width) * height * channels, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }

    double& at(int x, int y, int c = 0) {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }
    double at(int x, int y, int c = 0) const {
        return data_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
    }
    double* pixel(int x, int y) {
        return &data_[(static_cast<size_t>(y) * width_ + x) * channels_];
    }
    const double* pixel(int x, int y) const {
        return &data_[(static_cast<size_t>(y) * width_ + x) * channels_];
    }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    size_t size() const { return data_.size(); }

    bool same_shape(const ImageGrid& o) const {
        return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
    }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    // Rec.601 luma for 3-channel images, identity copy for single channel.
    ImageGrid to_gray() const;

    ImageGrid clamped01() const;

private:
    int width_ = 0, height_ = 0, channels_ = 0;
    std::vector<double> data_;
};

// Per-pixel boolean grid (foreground masks, texel coverage, validity).
struct MaskGrid {
    int width = 0, height = 0;
    std::vector<uint8_t> data;

    MaskGrid() = default;
    MaskGrid(int w, int h, uint8_t fill = 0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    bool at(int x, int y) const { return data[static_cast<size_t>(y) * width + x] != 0; }
    void set(int x, int y, bool v) { data[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    size_t count() const;
};

// Bilinear resize with half-pixel centers (sample of dst pixel (x,y) reads
// source coordinate ((x+0.5)*sw/dw - 0.5, ...), clamped to edge).
void resize_bilinear(const double* src, int sw, int sh, int channels,
                     double* dst, int dw, int dh);
ImageGrid resize_bilinear(const ImageGrid& src, int dw, int dh);

// Exact adjoint of resize_bilinear: scatters a dst-sized gradient back onto
// a src-sized grid using the identical weights.
void resize_bilinear_adjoint(const double* grad, int dw, int dh, int channels,
                             double* src_grad, int sw, int sh);

} // namespace texflow
