#include "texflow/flowfield.hpp"

#include <algorithm>
#include <cmath>

#include "texflow/parallel.hpp"

namespace texflow {

AngleSetImage::AngleSetImage(int w, int h, double tau_step)
    : width_(w), height_(h), bins_(bin_count(tau_step)), tau_step_(tau_step),
      bin_(static_cast<size_t>(w) * h, kExcluded) {}

int bin_count(double tau_step_deg) {
    double b = 180.0 / tau_step_deg;
    int bi = static_cast<int>(std::lround(b));
    if (bi < 1 || std::fabs(b - bi) > 1e-9)
        throw FlowError("angle tolerance must divide 180 degrees");
    return bi;
}

int angle_bin(double theta_radians, double tau_step_deg) {
    int b = bin_count(tau_step_deg);
    double deg = theta_radians * (180.0 / M_PI);
    deg = std::fmod(deg, 180.0);
    if (deg < 0) deg += 180.0;
    int bin = static_cast<int>(std::floor((deg + tau_step_deg * 0.5) / tau_step_deg));
    return bin % b;
}

double bin_center(int bin, double tau_step_deg) {
    double deg = bin * tau_step_deg;
    return deg * (M_PI / 180.0);
}

namespace {

inline int reflect(int i, int n) {
    // mirror across the border without repeating the edge pixel
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
    return std::clamp(i, 0, n - 1);
}

inline double fold_angle(double a) {
    a = std::fmod(a, M_PI);
    if (a < 0) a += M_PI;
    if (a >= M_PI) a = 0.0;
    return a;
}

} // namespace

DirectionField image_gradient(const ImageGrid& gray) {
    if (gray.channels() != 1)
        throw FlowError("image_gradient expects a single-channel image");
    int w = gray.width(), h = gray.height();
    DirectionField out(w, h);
    for (int y = 0; y < h; ++y) {
        int ym = reflect(y - 1, h), yp = reflect(y + 1, h);
        for (int x = 0; x < w; ++x) {
            int xm = reflect(x - 1, w), xp = reflect(x + 1, w);
            double tl = gray.at(xm, ym), tc = gray.at(x, ym), tr = gray.at(xp, ym);
            double ml = gray.at(xm, y), mr = gray.at(xp, y);
            double bl = gray.at(xm, yp), bc = gray.at(x, yp), br = gray.at(xp, yp);
            double gx = (tr + 2 * mr + br) - (tl + 2 * ml + bl);
            double gy = (bl + 2 * bc + br) - (tl + 2 * tc + tr);
            double mag = std::sqrt(gx * gx + gy * gy);
            size_t i = out.idx(x, y);
            out.magnitude[i] = mag;
            // tangent = gradient rotated by 90 degrees
            out.angle[i] = mag > 0 ? fold_angle(std::atan2(gx, -gy)) : 0.0;
        }
    }
    return out;
}

DirectionField etf(const ImageGrid& gray, const EtfParams& params) {
    if (params.kernel_radius < 1) throw FlowError("etf kernel radius must be >= 1");
    if (params.iterations < 0) throw FlowError("etf iterations must be >= 0");
    DirectionField init = image_gradient(gray);
    if (params.iterations == 0) return init;

    int w = init.width, h = init.height;
    size_t n = static_cast<size_t>(w) * h;
    std::vector<double> tx(n), ty(n), nx(n), ny(n);
    for (size_t i = 0; i < n; ++i) {
        if (init.magnitude[i] > 0) {
            tx[i] = std::cos(init.angle[i]);
            ty[i] = std::sin(init.angle[i]);
        } else {
            tx[i] = 0.0;
            ty[i] = 0.0;
        }
    }

    const int r = params.kernel_radius;
    const std::vector<double>& mag = init.magnitude;
    for (int it = 0; it < params.iterations; ++it) {
        parallel_for(0, h, [&](int y) {
            for (int x = 0; x < w; ++x) {
                size_t i = static_cast<size_t>(y) * w + x;
                double cx = tx[i], cy = ty[i];
                bool degenerate = cx == 0.0 && cy == 0.0;
                double sx = 0.0, sy = 0.0;
                int y0 = std::max(0, y - r), y1 = std::min(h - 1, y + r);
                int x0 = std::max(0, x - r), x1 = std::min(w - 1, x + r);
                for (int yy = y0; yy <= y1; ++yy) {
                    const double* trow = &tx[static_cast<size_t>(yy) * w];
                    const double* urow = &ty[static_cast<size_t>(yy) * w];
                    const double* mrow = &mag[static_cast<size_t>(yy) * w];
                    for (int xx = x0; xx <= x1; ++xx) {
                        double ox = trow[xx], oy = urow[xx];
                        double wm = 0.5 * (1.0 + std::tanh(mrow[xx] - mag[i]));
                        double d = cx * ox + cy * oy;
                        // degenerate centers average their neighborhood so
                        // they adopt a direction instead of staying stuck
                        double wd = degenerate ? 1.0 : std::fabs(d);
                        double phi = d < 0 ? -1.0 : 1.0;
                        sx += phi * wm * wd * ox;
                        sy += phi * wm * wd * oy;
                    }
                }
                double len = std::sqrt(sx * sx + sy * sy);
                size_t o = i;
                if (len > 1e-12) {
                    nx[o] = sx / len;
                    ny[o] = sy / len;
                } else {
                    nx[o] = cx;
                    ny[o] = cy;
                }
            }
        });
        tx.swap(nx);
        ty.swap(ny);
    }

    DirectionField out(w, h);
    out.magnitude = init.magnitude;
    for (size_t i = 0; i < n; ++i)
        out.angle[i] = (tx[i] == 0.0 && ty[i] == 0.0) ? 0.0 : fold_angle(std::atan2(ty[i], tx[i]));
    return out;
}

namespace {

// 1D lower envelope of parabolas (squared distance transform).
void edt_1d(const double* f, int n, double* d, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -1e300;
    z[1] = 1e300;
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            int p = v[k];
            s = ((f[q] + q * q) - (f[p] + p * p)) / (2.0 * q - 2.0 * p);
            if (s <= z[k]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = 1e300;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        double dq = q - v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

} // namespace

ImageGrid edge_distance(const ImageGrid& binary) {
    if (binary.channels() != 1)
        throw FlowError("edge_distance expects a single-channel image");
    int w = binary.width(), h = binary.height();
    bool any = false;
    ImageGrid sq(w, h, 1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool edge = binary.at(x, y) >= 0.5;
            any |= edge;
            sq.at(x, y) = edge ? 0.0 : 1e300;
        }
    if (!any) throw FlowError("contour render contains no guidance lines");

    int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);
    // columns, then rows
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = sq.at(x, y);
        edt_1d(f.data(), h, d.data(), v.data(), z.data());
        for (int y = 0; y < h; ++y) sq.at(x, y) = d[y];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = sq.at(x, y);
        edt_1d(f.data(), w, d.data(), v.data(), z.data());
        for (int x = 0; x < w; ++x) sq.at(x, y) = std::sqrt(d[x]);
    }
    return sq;
}

AngleSetImage discretize_angles(const DirectionField& field, double tau_step) {
    AngleSetImage out(field.width, field.height, tau_step);
    for (int y = 0; y < field.height; ++y)
        for (int x = 0; x < field.width; ++x)
            out.set_bin(x, y, static_cast<int16_t>(angle_bin(field.angle[field.idx(x, y)], tau_step)));
    return out;
}

ContourField contour_direction_field(const ImageGrid& rendered_contours,
                                     const MaskGrid& foreground,
                                     const EtfParams& params, double tau_step,
                                     bool dark_lines) {
    if (rendered_contours.channels() != 1)
        throw FlowError("contour render must be single-channel");
    int w = rendered_contours.width(), h = rendered_contours.height();

    if (foreground.count() == 0) {
        // nothing rendered: every pixel is excluded, no field to build
        ContourField out;
        out.distance = ImageGrid(w, h, 1, 0.0);
        out.direction = DirectionField(w, h);
        out.bins = AngleSetImage(w, h, tau_step);
        return out;
    }

    ImageGrid edges(w, h, 1, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!foreground.at(x, y)) continue; // background never counts as a line
            double v = rendered_contours.at(x, y);
            bool line = dark_lines ? v < 0.5 : v >= 0.5;
            edges.at(x, y) = line ? 1.0 : 0.0;
        }

    ContourField out;
    out.distance = edge_distance(edges);
    out.direction = etf(out.distance, params);
    out.bins = discretize_angles(out.direction, tau_step);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (!foreground.at(x, y)) out.bins.set_bin(x, y, AngleSetImage::kExcluded);
    return out;
}

ImageGrid direction_field_debug_image(const DirectionField& field) {
    double max_mag = 0;
    for (double m : field.magnitude) max_mag = std::max(max_mag, m);
    double scale = max_mag > 0 ? 1.0 / max_mag : 0.0;

    ImageGrid out(field.width, field.height, 3);
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            size_t i = field.idx(x, y);
            double hue = 2.0 * field.angle[i] * (180.0 / M_PI); // [0,360)
            double val = field.magnitude[i] * scale;
            double c = val;
            double hp = hue / 60.0;
            double xx = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
            double r = 0, g = 0, b = 0;
            if (hp < 1) { r = c; g = xx; }
            else if (hp < 2) { r = xx; g = c; }
            else if (hp < 3) { g = c; b = xx; }
            else if (hp < 4) { g = xx; b = c; }
            else if (hp < 5) { r = xx; b = c; }
            else { r = c; b = xx; }
            double* p = out.pixel(x, y);
            p[0] = r; p[1] = g; p[2] = b;
        }
    }
    return out;
}

} // namespace texflow
