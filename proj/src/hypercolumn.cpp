#include "texflow/hypercolumn.hpp"

#include <algorithm>
#include <cmath>

namespace texflow {

std::vector<std::vector<double>> HypercolumnMap::means_over(const std::vector<uint8_t>* include) const {
    std::vector<std::vector<double>> means(layer_channels.size());
    for (size_t l = 0; l < layer_channels.size(); ++l)
        means[l].assign(layer_channels[l], 0.0);

    size_t n = 0;
    size_t total = cells();
    for (size_t i = 0; i < total; ++i) {
        if (include && (*include)[i] == 0) continue;
        ++n;
        const double* v = &data[i * dim];
        for (size_t l = 0; l < layer_channels.size(); ++l) {
            const double* seg = v + layer_offsets[l];
            double* m = means[l].data();
            for (int c = 0; c < layer_channels[l]; ++c) m[c] += seg[c];
        }
    }
    if (n > 0)
        for (auto& m : means)
            for (double& v : m) v /= static_cast<double>(n);
    return means;
}

HypercolumnMap downsample_features(const FeatureMaps& maps, int d) {
    if (d < 1) throw ExtractorError("feature downsample factor must be >= 1");
    if (maps.taps.empty()) throw ExtractorError("no tap layers to downsample");
    int gw = maps.input_width / d, gh = maps.input_height / d;
    if (gw < 1 || gh < 1)
        throw ExtractorError("feature downsample factor exceeds the input size");

    HypercolumnMap hc;
    hc.width = gw;
    hc.height = gh;
    for (const Tensor& t : maps.taps) {
        hc.layer_offsets.push_back(hc.dim);
        hc.layer_channels.push_back(t.channels);
        hc.dim += t.channels;
    }
    hc.data.assign(hc.cells() * hc.dim, 0.0);

    std::vector<double> resized;
    for (size_t l = 0; l < maps.taps.size(); ++l) {
        const Tensor& t = maps.taps[l];
        resized.assign(static_cast<size_t>(gw) * gh * t.channels, 0.0);
        resize_bilinear(t.data.data(), t.width, t.height, t.channels,
                        resized.data(), gw, gh);
        int off = hc.layer_offsets[l];
        for (size_t i = 0; i < hc.cells(); ++i) {
            const double* src = &resized[i * t.channels];
            double* dst = &hc.data[i * hc.dim + off];
            for (int c = 0; c < t.channels; ++c) dst[c] = src[c];
        }
    }
    hc.layer_means = hc.means_over(nullptr);
    return hc;
}

std::vector<Tensor> downsample_features_adjoint(const HypercolumnMap& hc,
                                                const std::vector<double>& cell_grads,
                                                const FeatureMaps& maps, int d) {
    (void)d;
    if (cell_grads.size() != hc.data.size())
        throw ExtractorError("hypercolumn gradient has the wrong size");
    if (maps.taps.size() != hc.layer_channels.size())
        throw ExtractorError("hypercolumn/feature-map layer count mismatch");

    std::vector<Tensor> out;
    out.reserve(maps.taps.size());
    std::vector<double> layer_grad;
    for (size_t l = 0; l < maps.taps.size(); ++l) {
        const Tensor& t = maps.taps[l];
        if (t.channels != hc.layer_channels[l])
            throw ExtractorError("hypercolumn layer channel mismatch");
        int off = hc.layer_offsets[l];
        layer_grad.assign(static_cast<size_t>(hc.width) * hc.height * t.channels, 0.0);
        for (size_t i = 0; i < hc.cells(); ++i) {
            const double* src = &cell_grads[i * hc.dim + off];
            double* dst = &layer_grad[i * t.channels];
            for (int c = 0; c < t.channels; ++c) dst[c] = src[c];
        }
        Tensor g(t.width, t.height, t.channels, 0.0);
        resize_bilinear_adjoint(layer_grad.data(), hc.width, hc.height, t.channels,
                                g.data.data(), t.width, t.height);
        out.push_back(std::move(g));
    }
    return out;
}

namespace {

// Inverse map of a rotation about the image center: where destination pixel
// center (dx, dy) reads from in the source. Content at orientation theta
// ends up at theta + angle (y-down convention, matching DirectionField).
struct InverseRotation {
    double cx, cy, c, s;
    InverseRotation(int w, int h, double angle_deg)
        : cx(w * 0.5), cy(h * 0.5),
          c(std::cos(angle_deg * (M_PI / 180.0))),
          s(std::sin(angle_deg * (M_PI / 180.0))) {}

    void map(double dx, double dy, double& sx, double& sy) const {
        double rx = dx - cx, ry = dy - cy;
        sx = cx + c * rx + s * ry;
        sy = cy - s * rx + c * ry;
    }
};

} // namespace

RotatedImage rotate_image(const ImageGrid& image, double angle_deg, Filter filter) {
    int w = image.width(), h = image.height(), ch = image.channels();
    RotatedImage out;
    out.image = ImageGrid(w, h, ch, 0.0);
    out.valid = MaskGrid(w, h, 0);

    InverseRotation inv(w, h, angle_deg);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sx, sy;
            inv.map(x + 0.5, y + 0.5, sx, sy);
            if (sx < 0.0 || sx > w || sy < 0.0 || sy > h) continue;
            out.valid.set(x, y, true);
            double* dst = out.image.pixel(x, y);
            if (filter == Filter::Nearest) {
                int ix = std::min(static_cast<int>(sx), w - 1);
                int iy = std::min(static_cast<int>(sy), h - 1);
                const double* src = image.pixel(ix, iy);
                for (int c = 0; c < ch; ++c) dst[c] = src[c];
            } else {
                double u = sx - 0.5, v = sy - 0.5;
                double fx = std::floor(u), fy = std::floor(v);
                double tx = u - fx, ty = v - fy;
                int x0 = std::clamp(static_cast<int>(fx), 0, w - 1);
                int x1 = std::clamp(static_cast<int>(fx) + 1, 0, w - 1);
                int y0 = std::clamp(static_cast<int>(fy), 0, h - 1);
                int y1 = std::clamp(static_cast<int>(fy) + 1, 0, h - 1);
                const double* p00 = image.pixel(x0, y0);
                const double* p10 = image.pixel(x1, y0);
                const double* p01 = image.pixel(x0, y1);
                const double* p11 = image.pixel(x1, y1);
                for (int c = 0; c < ch; ++c) {
                    double top = p00[c] * (1 - tx) + p10[c] * tx;
                    double bot = p01[c] * (1 - tx) + p11[c] * tx;
                    dst[c] = top * (1 - ty) + bot * ty;
                }
            }
        }
    }
    return out;
}

AngleSetImage rotate_bins(const AngleSetImage& bins, double angle_deg) {
    int w = bins.width(), h = bins.height();
    AngleSetImage out(w, h, bins.tau_step());
    InverseRotation inv(w, h, angle_deg);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double sx, sy;
            inv.map(x + 0.5, y + 0.5, sx, sy);
            if (sx < 0.0 || sx > w || sy < 0.0 || sy > h) continue;
            int ix = std::min(static_cast<int>(sx), w - 1);
            int iy = std::min(static_cast<int>(sy), h - 1);
            out.set_bin(x, y, bins.bin(ix, iy));
        }
    }
    return out;
}

} // namespace texflow
