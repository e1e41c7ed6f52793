#pragma once

#include <cstdint>
#include <vector>

#include "texflow/camera.hpp"
#include "texflow/image.hpp"
#include "texflow/mesh.hpp"

namespace texflow {

enum class Filter { Bilinear, Nearest };

// Per-pixel (validity, uv, depth) record for one viewpoint. Invalid pixels
// carry no uv/depth semantics.
class FragmentMap {
public:
    FragmentMap() = default;
    FragmentMap(int w, int h)
        : width_(w), height_(h),
          valid_(static_cast<size_t>(w) * h, 0),
          u_(static_cast<size_t>(w) * h, 0.0),
          v_(static_cast<size_t>(w) * h, 0.0),
          depth_(static_cast<size_t>(w) * h, 0.0) {}

    int width() const { return width_; }
    int height() const { return height_; }
    bool valid(int x, int y) const { return valid_[idx(x, y)] != 0; }
    double u(int x, int y) const { return u_[idx(x, y)]; }
    double v(int x, int y) const { return v_[idx(x, y)]; }
    double depth(int x, int y) const { return depth_[idx(x, y)]; }

    void set(int x, int y, double u, double v, double depth) {
        size_t i = idx(x, y);
        valid_[i] = 1;
        u_[i] = u;
        v_[i] = v;
        depth_[i] = depth;
    }

    MaskGrid foreground() const;

private:
    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width_ + x; }
    int width_ = 0, height_ = 0;
    std::vector<uint8_t> valid_;
    std::vector<double> u_, v_, depth_;
};

// Perspective projection with z-buffering, perspective-correct uv
// interpolation and pixel centers at (x+0.5, y+0.5). Back-face culling is
// disabled; degenerate screen-space triangles are skipped. Equal depths
// resolve to the lower face index.
FragmentMap rasterize(const Mesh& mesh, const Camera& camera, int width, int height);

struct RenderResult {
    ImageGrid image;     // background pixels are 0
    MaskGrid foreground; // true where the fragment map is valid
};

// Texture lookup through a fragment map. uv (0,0) maps to texel coordinate
// -0.5 (texel centers at uv (i+0.5)/N), clamped to edge.
RenderResult sample_texture(const ImageGrid& texture, const FragmentMap& frag, Filter filter);

// Exact adjoint of sample_texture: for all T, g it holds that
// <sample_texture(T), g> == <T, scatter_gradient(g)>.
ImageGrid scatter_gradient(const ImageGrid& grad, const FragmentMap& frag,
                           int tex_w, int tex_h, Filter filter);

// Marks texels whose value can influence any valid pixel of the fragment map.
void accumulate_touched_texels(const FragmentMap& frag, Filter filter, MaskGrid& texels);

// Coverage of the mesh's UV charts on a tex_w x tex_h texel grid ("used
// texels": any texel whose center falls inside a face's uv triangle).
MaskGrid rasterize_uv_charts(const Mesh& mesh, int tex_w, int tex_h);

} // namespace texflow
