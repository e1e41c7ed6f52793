#include "texflow/raster.hpp"

#include <algorithm>
#include <cmath>

namespace texflow {

MaskGrid FragmentMap::foreground() const {
    MaskGrid m(width_, height_);
    m.data = valid_;
    return m;
}

namespace {

struct ClipVertex {
    Vec3 cam; // camera space, view axis is -z
    Vec2 uv;
};

// Sutherland-Hodgman against the near plane (cam.z <= -near). Attributes are
// interpolated linearly in camera space.
int clip_near(const ClipVertex* in, int n, double near_plane, ClipVertex* out) {
    int m = 0;
    for (int i = 0; i < n; ++i) {
        const ClipVertex& a = in[i];
        const ClipVertex& b = in[(i + 1) % n];
        bool ina = a.cam.z <= -near_plane;
        bool inb = b.cam.z <= -near_plane;
        if (ina) out[m++] = a;
        if (ina != inb) {
            double t = (-near_plane - a.cam.z) / (b.cam.z - a.cam.z);
            ClipVertex v;
            v.cam = a.cam + (b.cam - a.cam) * t;
            v.uv = {a.uv.x + (b.uv.x - a.uv.x) * t, a.uv.y + (b.uv.y - a.uv.y) * t};
            out[m++] = v;
        }
    }
    return m;
}

struct ScreenVertex {
    double x, y;   // pixel coordinates
    double w;      // view depth (positive)
    double u, v;
};

} // namespace

FragmentMap rasterize(const Mesh& mesh, const Camera& camera, int width, int height) {
    FragmentMap frag(width, height);
    std::vector<double> zbuf(static_cast<size_t>(width) * height, 1e300);

    Vec3 fwd = normalized(camera.target - camera.position);
    Vec3 right = normalized(cross(fwd, camera.up));
    Vec3 up = cross(right, fwd);
    double tan_half = std::tan(camera.vfov * 0.5);
    double aspect = static_cast<double>(width) / height;

    auto to_cam = [&](const Vec3& p) -> Vec3 {
        Vec3 d = p - camera.position;
        return {dot(d, right), dot(d, up), -dot(d, fwd)};
    };

    ClipVertex poly[4], clipped[5];
    ScreenVertex sv[5];

    for (const Face& face : mesh.faces) {
        for (int k = 0; k < 3; ++k) {
            poly[k].cam = to_cam(mesh.vertices[face[k].position]);
            const Vec2& uv = mesh.uvs[face[k].uv];
            poly[k].uv = uv;
        }
        int n = clip_near(poly, 3, camera.near_plane, clipped);
        if (n < 3) continue;

        for (int k = 0; k < n; ++k) {
            double depth = -clipped[k].cam.z;
            double ndc_x = clipped[k].cam.x / (tan_half * aspect * depth);
            double ndc_y = clipped[k].cam.y / (tan_half * depth);
            sv[k] = {(ndc_x + 1.0) * 0.5 * width, (1.0 - ndc_y) * 0.5 * height,
                     depth, clipped[k].uv.x, clipped[k].uv.y};
        }

        for (int t = 2; t < n; ++t) {
            const ScreenVertex& a = sv[0];
            const ScreenVertex& b = sv[t - 1];
            const ScreenVertex& c = sv[t];

            double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            if (std::fabs(area) < 1e-12) continue; // zero-area in screen space

            int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}) - 0.5)));
            int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}) - 0.5)));
            int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}) - 0.5)));
            int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}) - 0.5)));

            double inv_area = 1.0 / area;
            for (int y = y0; y <= y1; ++y) {
                double py = y + 0.5;
                for (int x = x0; x <= x1; ++x) {
                    double px = x + 0.5;
                    double l0 = ((b.x - px) * (c.y - py) - (b.y - py) * (c.x - px)) * inv_area;
                    double l1 = ((c.x - px) * (a.y - py) - (c.y - py) * (a.x - px)) * inv_area;
                    double l2 = 1.0 - l0 - l1;
                    if (l0 < 0 || l1 < 0 || l2 < 0) continue;

                    double inv_w = l0 / a.w + l1 / b.w + l2 / c.w;
                    double depth = 1.0 / inv_w;
                    if (depth <= camera.near_plane || depth >= camera.far_plane) continue;

                    size_t i = static_cast<size_t>(y) * width + x;
                    if (depth < zbuf[i]) {
                        zbuf[i] = depth;
                        double u = (l0 * a.u / a.w + l1 * b.u / b.w + l2 * c.u / c.w) * depth;
                        double v = (l0 * a.v / a.w + l1 * b.v / b.w + l2 * c.v / c.w) * depth;
                        frag.set(x, y, u, v, depth);
                    }
                }
            }
        }
    }
    return frag;
}

namespace {

struct TexelTaps {
    int x[4], y[4];
    double w[4];
    int count;
};

inline TexelTaps taps_for(double u, double v, int tw, int th, Filter filter) {
    TexelTaps t;
    double tx = u * tw - 0.5;
    double ty = v * th - 0.5;
    if (filter == Filter::Nearest) {
        t.count = 1;
        t.x[0] = std::clamp(static_cast<int>(std::floor(tx + 0.5)), 0, tw - 1);
        t.y[0] = std::clamp(static_cast<int>(std::floor(ty + 0.5)), 0, th - 1);
        t.w[0] = 1.0;
        return t;
    }
    double fx = std::floor(tx), fy = std::floor(ty);
    double ax = tx - fx, ay = ty - fy;
    int x0 = std::clamp(static_cast<int>(fx), 0, tw - 1);
    int x1 = std::clamp(static_cast<int>(fx) + 1, 0, tw - 1);
    int y0 = std::clamp(static_cast<int>(fy), 0, th - 1);
    int y1 = std::clamp(static_cast<int>(fy) + 1, 0, th - 1);
    t.count = 4;
    t.x[0] = x0; t.y[0] = y0; t.w[0] = (1 - ax) * (1 - ay);
    t.x[1] = x1; t.y[1] = y0; t.w[1] = ax * (1 - ay);
    t.x[2] = x0; t.y[2] = y1; t.w[2] = (1 - ax) * ay;
    t.x[3] = x1; t.y[3] = y1; t.w[3] = ax * ay;
    return t;
}

} // namespace

RenderResult sample_texture(const ImageGrid& texture, const FragmentMap& frag, Filter filter) {
    int w = frag.width(), h = frag.height();
    int c = texture.channels();
    RenderResult out;
    out.image = ImageGrid(w, h, c, 0.0);
    out.foreground = frag.foreground();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!frag.valid(x, y)) continue;
            TexelTaps t = taps_for(frag.u(x, y), frag.v(x, y),
                                   texture.width(), texture.height(), filter);
            double* dst = out.image.pixel(x, y);
            for (int k = 0; k < t.count; ++k) {
                const double* src = texture.pixel(t.x[k], t.y[k]);
                for (int ch = 0; ch < c; ++ch) dst[ch] += t.w[k] * src[ch];
            }
        }
    }
    return out;
}

ImageGrid scatter_gradient(const ImageGrid& grad, const FragmentMap& frag,
                           int tex_w, int tex_h, Filter filter) {
    int c = grad.channels();
    ImageGrid out(tex_w, tex_h, c, 0.0);
    for (int y = 0; y < frag.height(); ++y) {
        for (int x = 0; x < frag.width(); ++x) {
            if (!frag.valid(x, y)) continue;
            TexelTaps t = taps_for(frag.u(x, y), frag.v(x, y), tex_w, tex_h, filter);
            const double* g = grad.pixel(x, y);
            for (int k = 0; k < t.count; ++k) {
                double* dst = out.pixel(t.x[k], t.y[k]);
                for (int ch = 0; ch < c; ++ch) dst[ch] += t.w[k] * g[ch];
            }
        }
    }
    return out;
}

void accumulate_touched_texels(const FragmentMap& frag, Filter filter, MaskGrid& texels) {
    for (int y = 0; y < frag.height(); ++y) {
        for (int x = 0; x < frag.width(); ++x) {
            if (!frag.valid(x, y)) continue;
            TexelTaps t = taps_for(frag.u(x, y), frag.v(x, y),
                                   texels.width, texels.height, filter);
            for (int k = 0; k < t.count; ++k) texels.set(t.x[k], t.y[k], true);
        }
    }
}

MaskGrid rasterize_uv_charts(const Mesh& mesh, int tex_w, int tex_h) {
    MaskGrid mask(tex_w, tex_h);
    for (const Face& face : mesh.faces) {
        Vec2 a = mesh.uvs[face[0].uv];
        Vec2 b = mesh.uvs[face[1].uv];
        Vec2 c = mesh.uvs[face[2].uv];
        double ax = a.x * tex_w, ay = a.y * tex_h;
        double bx = b.x * tex_w, by = b.y * tex_h;
        double cx = c.x * tex_w, cy = c.y * tex_h;
        double area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
        if (std::fabs(area) < 1e-12) continue;
        double inv_area = 1.0 / area;
        int x0 = std::max(0, static_cast<int>(std::floor(std::min({ax, bx, cx}) - 0.5)));
        int x1 = std::min(tex_w - 1, static_cast<int>(std::ceil(std::max({ax, bx, cx}) - 0.5)));
        int y0 = std::max(0, static_cast<int>(std::floor(std::min({ay, by, cy}) - 0.5)));
        int y1 = std::min(tex_h - 1, static_cast<int>(std::ceil(std::max({ay, by, cy}) - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            double py = y + 0.5;
            for (int x = x0; x <= x1; ++x) {
                double px = x + 0.5;
                double l0 = ((bx - px) * (cy - py) - (by - py) * (cx - px)) * inv_area;
                double l1 = ((cx - px) * (ay - py) - (cy - py) * (ax - px)) * inv_area;
                double l2 = 1.0 - l0 - l1;
                if (l0 >= 0 && l1 >= 0 && l2 >= 0) mask.set(x, y, true);
            }
        }
    }
    return mask;
}

} // namespace texflow
