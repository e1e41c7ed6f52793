#include "texflow/colormatch.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace texflow {

void ColorTransform::apply(const double* in, double* out) const {
    double d[3] = {in[0] - mu_c[0], in[1] - mu_c[1], in[2] - mu_c[2]};
    for (int r = 0; r < 3; ++r)
        out[r] = A[r][0] * d[0] + A[r][1] * d[1] + A[r][2] * d[2] + mu_s[r];
}

namespace {

void moments(const std::vector<double>& rgb, Eigen::Vector3d& mean, Eigen::Matrix3d& cov) {
    size_t n = rgb.size() / 3;
    mean.setZero();
    for (size_t i = 0; i < n; ++i)
        mean += Eigen::Vector3d(rgb[i * 3], rgb[i * 3 + 1], rgb[i * 3 + 2]);
    mean /= static_cast<double>(n);
    cov.setZero();
    for (size_t i = 0; i < n; ++i) {
        Eigen::Vector3d d = Eigen::Vector3d(rgb[i * 3], rgb[i * 3 + 1], rgb[i * 3 + 2]) - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(n);
}

// symmetric (inverse) square root; eigenvalues are clamped at zero and
// shifted before the root so rank-deficient covariances stay finite
Eigen::Matrix3d sym_sqrt(const Eigen::Matrix3d& m, double shift, bool inverse) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m);
    Eigen::Vector3d lam = es.eigenvalues();
    Eigen::Vector3d d;
    for (int i = 0; i < 3; ++i) {
        double v = std::max(lam[i], 0.0) + shift;
        double r = std::sqrt(v);
        d[i] = inverse ? 1.0 / r : r;
    }
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

ColorTransform solve_color_match(const std::vector<double>& content_rgb,
                                 const std::vector<double>& style_rgb) {
    if (content_rgb.size() % 3 != 0 || style_rgb.size() % 3 != 0)
        throw ColorMatchError("color samples must be RGB triplets");
    if (content_rgb.size() < 6)
        throw ColorMatchError("color matching needs at least 2 content samples");
    if (style_rgb.size() < 6)
        throw ColorMatchError("color matching needs at least 2 style samples");

    Eigen::Vector3d mu_c, mu_s;
    Eigen::Matrix3d cov_c, cov_s;
    moments(content_rgb, mu_c, cov_c);
    moments(style_rgb, mu_s, cov_s);

    const double eps = 1e-8;
    Eigen::Matrix3d a = sym_sqrt(cov_s, 0.0, false) * sym_sqrt(cov_c, eps, true);

    ColorTransform t;
    for (int r = 0; r < 3; ++r) {
        t.mu_c[r] = mu_c[r];
        t.mu_s[r] = mu_s[r];
        for (int c = 0; c < 3; ++c) t.A[r][c] = a(r, c);
    }
    return t;
}

std::vector<double> gather_pixels(const ImageGrid& image, const MaskGrid* mask) {
    if (image.channels() != 3)
        throw ColorMatchError("color matching expects 3-channel images");
    std::vector<double> out;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            if (mask && !mask->at(x, y)) continue;
            const double* p = image.pixel(x, y);
            out.insert(out.end(), p, p + 3);
        }
    }
    return out;
}

ImageGrid apply_color_match(const ImageGrid& texture, const MaskGrid& mask,
                            const ColorTransform& t, bool clamp01) {
    if (texture.channels() != 3)
        throw ColorMatchError("color matching expects 3-channel images");
    if (mask.width != texture.width() || mask.height != texture.height())
        throw ColorMatchError("mask dimensions do not match the texture");
    ImageGrid out = texture;
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            if (!mask.at(x, y)) continue;
            double* p = out.pixel(x, y);
            double v[3];
            t.apply(p, v);
            for (int c = 0; c < 3; ++c)
                p[c] = clamp01 ? std::clamp(v[c], 0.0, 1.0) : v[c];
        }
    }
    return out;
}

} // namespace texflow
