#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "texflow/camera.hpp"
#include "texflow/colormatch.hpp"
#include "texflow/dictionary.hpp"
#include "texflow/extractor.hpp"
#include "texflow/flowfield.hpp"
#include "texflow/hypercolumn.hpp"
#include "texflow/image.hpp"
#include "texflow/loss.hpp"
#include "texflow/mesh.hpp"
#include "texflow/raster.hpp"

namespace texflow {

struct TransferError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TransferConfig {
    double tau_step = 5.0;
    double lambda_tv = 2e-5;
    double learning_rate = 0.01;
    int iterations = 1000; // per multiscale step
    int scales = 2;        // 2: once downsampled by 2, then full resolution
    double beta = 0.25;    // blend weight of the original texture
    int viewpoints = 250;
    int render_size = 512;
    int texture_size = 2048; // random-init only; a loaded texture rules
    int feature_downsample = 4;
    EtfParams etf_style{10, 10};
    EtfParams etf_contour{5, 5};
    uint64_t seed = 0;
    bool dark_lines = true; // guidance strokes darker than their surround
    bool random_init = false;
    int snapshot_every = 0; // texture snapshots per iteration count; 0 = off
    bool keep_debug = false;
    std::string cache_dir; // dictionary cache location; empty = no cache
    ExtractorSpec extractor = ExtractorSpec::builtin_default(0);

    void validate() const;
};

// Everything per camera that does not depend on the evolving texture.
struct PrecomputedViewpoint {
    Camera camera;
    FragmentMap frag;
    AngleSetImage r_alpha;       // at hypercolumn resolution
    std::vector<int32_t> region; // per hypercolumn cell; empty without T_S
    bool has_guidance = false;   // false: no guidance lines visible (warned)
    // kept only in debug runs
    ImageGrid debug_etf;
    ImageGrid debug_distance;
};

// Ascending sorted distinct 8-bit levels of the region texture over the used
// texels; level index = style index. Throws unless exactly n_styles levels.
std::vector<int> region_levels(const ImageGrid& regions, const MaskGrid& used,
                               size_t n_styles);

// Rasterizes every camera, samples the guidance texture through the
// fragments, and builds the screen-space orientation bins (distance field ->
// ETF -> discretize), downsampled to the hypercolumn grid by nearest
// sampling. region_index, when given, is a texel grid of 0-based style
// indices sampled the same way. Views without any visible guidance line come
// back all-excluded with a warning.
std::vector<PrecomputedViewpoint> precompute_viewpoints(
    const Mesh& mesh, const std::vector<Camera>& cameras, const ImageGrid& guidance,
    const ImageGrid* region_index, const TransferConfig& cfg, int render_size,
    std::vector<std::string>* warnings);

struct OptimState {
    ImageGrid texture;
    ImageGrid m, v; // Adam moments
    int64_t step = 0;
    MaskGrid trainable; // texels reachable by any fragment or UV chart
};

OptimState make_optim_state(ImageGrid texture, MaskGrid trainable);

// One Adam update (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected) applied
// to trainable texels only.
void adam_step(OptimState& state, const ImageGrid& grad, double lr);

struct LossHistoryRow {
    int scale = 0;
    int iteration = 0;
    int viewpoint = 0;
    double nnfm = 0, tv = 0, total = 0;
    size_t empty_bin_events = 0;
};

using ProgressFn = std::function<void(const LossHistoryRow&)>;

// The optimization loop at one scale: per iteration one viewpoint (seeded
// permutation, reshuffled each epoch), render -> features -> directional
// style loss + weighted TV -> backprop to the texture -> Adam.
void stylize_scale(OptimState& state, const std::vector<PrecomputedViewpoint>& views,
                   const std::vector<const RotatedStyleDictionary*>& dicts,
                   Extractor& extractor, const TransferConfig& cfg, int scale_index,
                   std::vector<LossHistoryRow>& history,
                   std::vector<std::pair<std::string, ImageGrid>>* snapshots = nullptr,
                   const ProgressFn& progress = {});

// beta * original + (1 - beta) * optimized, elementwise.
ImageGrid multiscale_blend(const ImageGrid& optimized, const ImageGrid& original_colormatched,
                           double beta);

struct RunInputs {
    Mesh mesh;
    ImageGrid content;  // ignored under random_init
    ImageGrid guidance; // grayscale strokes
    ImageGrid regions;  // empty unless multiple styles / partial routing
    std::vector<ImageGrid> styles;
    std::vector<ImageGrid> style_masks; // parallel to styles; empty = full
};

struct RunArtifacts {
    ImageGrid texture;       // final full-resolution result
    ImageGrid color_matched; // full-resolution color-matched content
    std::vector<LossHistoryRow> history;
    std::vector<std::string> warnings;
    std::vector<std::pair<std::string, double>> timings; // stage -> seconds
    std::vector<std::pair<std::string, ImageGrid>> snapshots;
    std::vector<ImageGrid> debug_etf;      // finest scale, per view (debug)
    std::vector<ImageGrid> debug_distance; // finest scale, per view (debug)
};

// The full pipeline: color matching per style region, per-scale dictionary
// construction from lockstep-downscaled styles, coarse-to-fine optimization
// with upsample + blend between scales, and a final composite that leaves
// texels outside every fragment and UV chart bit-identical to the
// color-matched input.
RunArtifacts run(const RunInputs& inputs, const TransferConfig& cfg,
                 const ProgressFn& progress = {});

} // namespace texflow
