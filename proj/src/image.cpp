#include "texflow/image.hpp"

#include <algorithm>
#include <cmath>

namespace texflow {

size_t MaskGrid::count() const {
    size_t n = 0;
    for (uint8_t v : data) n += v != 0;
    return n;
}

ImageGrid ImageGrid::to_gray() const {
    if (channels_ == 1) return *this;
    ImageGrid out(width_, height_, 1);
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x) {
            const double* p = pixel(x, y);
            out.at(x, y) = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        }
    }
    return out;
}

ImageGrid ImageGrid::clamped01() const {
    ImageGrid out = *this;
    for (size_t i = 0; i < out.size(); ++i)
        out.data()[i] = std::clamp(out.data()[i], 0.0, 1.0);
    return out;
}

namespace {

struct LinearTap {
    int i0, i1;
    double w0, w1;
};

// dst index -> two clamped source taps with bilinear weights
inline LinearTap tap_for(int d, int dn, int sn) {
    double s = (d + 0.5) * static_cast<double>(sn) / dn - 0.5;
    double f = std::floor(s);
    int i0 = static_cast<int>(f);
    double w1 = s - f;
    LinearTap t;
    t.i0 = std::clamp(i0, 0, sn - 1);
    t.i1 = std::clamp(i0 + 1, 0, sn - 1);
    t.w0 = 1.0 - w1;
    t.w1 = w1;
    return t;
}

} // namespace

void resize_bilinear(const double* src, int sw, int sh, int channels,
                     double* dst, int dw, int dh) {
    std::vector<LinearTap> xt(dw);
    for (int x = 0; x < dw; ++x) xt[x] = tap_for(x, dw, sw);
    for (int y = 0; y < dh; ++y) {
        LinearTap ty = tap_for(y, dh, sh);
        const double* r0 = src + static_cast<size_t>(ty.i0) * sw * channels;
        const double* r1 = src + static_cast<size_t>(ty.i1) * sw * channels;
        double* out = dst + static_cast<size_t>(y) * dw * channels;
        for (int x = 0; x < dw; ++x) {
            const LinearTap& tx = xt[x];
            const double* p00 = r0 + static_cast<size_t>(tx.i0) * channels;
            const double* p01 = r0 + static_cast<size_t>(tx.i1) * channels;
            const double* p10 = r1 + static_cast<size_t>(tx.i0) * channels;
            const double* p11 = r1 + static_cast<size_t>(tx.i1) * channels;
            for (int c = 0; c < channels; ++c) {
                out[static_cast<size_t>(x) * channels + c] =
                    ty.w0 * (tx.w0 * p00[c] + tx.w1 * p01[c]) +
                    ty.w1 * (tx.w0 * p10[c] + tx.w1 * p11[c]);
            }
        }
    }
}

ImageGrid resize_bilinear(const ImageGrid& src, int dw, int dh) {
    ImageGrid out(dw, dh, src.channels());
    resize_bilinear(src.data(), src.width(), src.height(), src.channels(),
                    out.data(), dw, dh);
    return out;
}

void resize_bilinear_adjoint(const double* grad, int dw, int dh, int channels,
                             double* src_grad, int sw, int sh) {
    std::vector<LinearTap> xt(dw);
    for (int x = 0; x < dw; ++x) xt[x] = tap_for(x, dw, sw);
    for (int y = 0; y < dh; ++y) {
        LinearTap ty = tap_for(y, dh, sh);
        double* r0 = src_grad + static_cast<size_t>(ty.i0) * sw * channels;
        double* r1 = src_grad + static_cast<size_t>(ty.i1) * sw * channels;
        const double* g = grad + static_cast<size_t>(y) * dw * channels;
        for (int x = 0; x < dw; ++x) {
            const LinearTap& tx = xt[x];
            for (int c = 0; c < channels; ++c) {
                double gv = g[static_cast<size_t>(x) * channels + c];
                r0[static_cast<size_t>(tx.i0) * channels + c] += ty.w0 * tx.w0 * gv;
                r0[static_cast<size_t>(tx.i1) * channels + c] += ty.w0 * tx.w1 * gv;
                r1[static_cast<size_t>(tx.i0) * channels + c] += ty.w1 * tx.w0 * gv;
                r1[static_cast<size_t>(tx.i1) * channels + c] += ty.w1 * tx.w1 * gv;
            }
        }
    }
}

} // namespace texflow
