#include "texflow/transfer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "texflow/rng.hpp"

namespace texflow {

void TransferConfig::validate() const {
    bin_count(tau_step); // throws unless it divides 180
    if (lambda_tv < 0) throw TransferError("lambda-tv must be >= 0");
    if (learning_rate <= 0) throw TransferError("learning rate must be > 0");
    if (iterations < 0) throw TransferError("iterations must be >= 0");
    if (scales < 1) throw TransferError("scales must be >= 1");
    if (beta < 0 || beta > 1) throw TransferError("beta must lie in [0,1]");
    if (viewpoints < 1) throw TransferError("viewpoints must be >= 1");
    if (feature_downsample < 1) throw TransferError("feature downsample must be >= 1");
    if (render_size < feature_downsample)
        throw TransferError("render size must be at least the feature downsample factor");
    if (random_init && texture_size < 2)
        throw TransferError("texture size must be >= 2");
    if (snapshot_every < 0) throw TransferError("snapshot interval must be >= 0");
    extractor.validate();
}

std::vector<int> region_levels(const ImageGrid& regions, const MaskGrid& used,
                               size_t n_styles) {
    if (regions.channels() != 1)
        throw TransferError("region texture must be single-channel here");
    if (regions.width() != used.width || regions.height() != used.height)
        throw TransferError("region texture dimensions do not match the texel mask");

    std::vector<uint8_t> seen(256, 0);
    for (int y = 0; y < regions.height(); ++y)
        for (int x = 0; x < regions.width(); ++x) {
            if (!used.at(x, y)) continue;
            int q = static_cast<int>(std::lround(std::clamp(regions.at(x, y), 0.0, 1.0) * 255.0));
            seen[q] = 1;
        }
    std::vector<int> levels;
    for (int q = 0; q < 256; ++q)
        if (seen[q]) levels.push_back(q);
    if (levels.size() != n_styles)
        throw TransferError("style-region texture has " + std::to_string(levels.size()) +
                            " distinct levels but " + std::to_string(n_styles) +
                            " style images were given");
    return levels;
}

namespace {

int nearest_level_index(int q, const std::vector<int>& levels) {
    int best = 0, best_d = 256;
    for (size_t i = 0; i < levels.size(); ++i) {
        int d = std::abs(q - levels[i]);
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(i);
        }
    }
    return best;
}

ImageGrid resize_nearest(const ImageGrid& src, int dw, int dh) {
    ImageGrid out(dw, dh, src.channels());
    for (int y = 0; y < dh; ++y) {
        int sy = cell_to_pixel(y, dh, src.height());
        for (int x = 0; x < dw; ++x) {
            int sx = cell_to_pixel(x, dw, src.width());
            const double* s = src.pixel(sx, sy);
            double* d = out.pixel(x, y);
            for (int c = 0; c < src.channels(); ++c) d[c] = s[c];
        }
    }
    return out;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

} // namespace

std::vector<PrecomputedViewpoint> precompute_viewpoints(
    const Mesh& mesh, const std::vector<Camera>& cameras, const ImageGrid& guidance,
    const ImageGrid* region_index, const TransferConfig& cfg, int render_size,
    std::vector<std::string>* warnings) {
    if (guidance.channels() != 1)
        throw TransferError("guidance texture must be single-channel here");
    const int rs = render_size;
    const int d = cfg.feature_downsample;
    const int cw = rs / d, ch = rs / d;
    if (cw < 1 || ch < 1)
        throw TransferError("render size must be at least the feature downsample factor");

    std::vector<PrecomputedViewpoint> views(cameras.size());
    for (size_t vi = 0; vi < cameras.size(); ++vi) {
        PrecomputedViewpoint& pv = views[vi];
        pv.camera = cameras[vi];
        pv.frag = rasterize(mesh, cameras[vi], rs, rs);
        MaskGrid fg = pv.frag.foreground();
        RenderResult lines = sample_texture(guidance, pv.frag, Filter::Nearest);

        pv.r_alpha = AngleSetImage(cw, ch, cfg.tau_step); // starts all-excluded
        ContourField field;
        if (fg.count() == 0) {
            pv.has_guidance = false; // object fully off-screen
        } else {
            try {
                field = contour_direction_field(lines.image, fg, cfg.etf_contour,
                                                cfg.tau_step, cfg.dark_lines);
                pv.has_guidance = true;
            } catch (const FlowError&) {
                pv.has_guidance = false;
            }
        }
        if (pv.has_guidance) {
            for (int cy = 0; cy < ch; ++cy) {
                int py = cell_to_pixel(cy, ch, rs);
                for (int cx = 0; cx < cw; ++cx) {
                    int px = cell_to_pixel(cx, cw, rs);
                    pv.r_alpha.set_bin(cx, cy, field.bins.bin(px, py));
                }
            }
            if (cfg.keep_debug) {
                pv.debug_etf = direction_field_debug_image(field.direction);
                double dmax = 0;
                for (int y = 0; y < rs; ++y)
                    for (int x = 0; x < rs; ++x) dmax = std::max(dmax, field.distance.at(x, y));
                pv.debug_distance = field.distance;
                if (dmax > 0)
                    for (int y = 0; y < rs; ++y)
                        for (int x = 0; x < rs; ++x) pv.debug_distance.at(x, y) /= dmax;
            }
        }

        if (region_index) {
            RenderResult reg = sample_texture(*region_index, pv.frag, Filter::Nearest);
            pv.region.assign(static_cast<size_t>(cw) * ch, 0);
            for (int cy = 0; cy < ch; ++cy) {
                int py = cell_to_pixel(cy, ch, rs);
                for (int cx = 0; cx < cw; ++cx) {
                    int px = cell_to_pixel(cx, cw, rs);
                    pv.region[static_cast<size_t>(cy) * cw + cx] =
                        pv.frag.valid(px, py)
                            ? static_cast<int32_t>(std::lround(reg.image.at(px, py)))
                            : 0;
                }
            }
        }
    }

    if (warnings) {
        for (size_t vi = 0; vi < views.size(); ++vi)
            if (!views[vi].has_guidance)
                warnings->push_back("viewpoint " + std::to_string(vi) +
                                    ": no guidance lines visible; directional loss disabled");
    }
    return views;
}

OptimState make_optim_state(ImageGrid texture, MaskGrid trainable) {
    OptimState s;
    s.m = ImageGrid(texture.width(), texture.height(), texture.channels(), 0.0);
    s.v = s.m;
    s.texture = std::move(texture);
    s.trainable = std::move(trainable);
    return s;
}

void adam_step(OptimState& state, const ImageGrid& grad, double lr) {
    if (!grad.same_shape(state.texture))
        throw TransferError("gradient dimensions do not match the texture");
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    int w = state.texture.width(), h = state.texture.height(), ch = state.texture.channels();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!state.trainable.at(x, y)) continue;
            double* t = state.texture.pixel(x, y);
            double* m = state.m.pixel(x, y);
            double* v = state.v.pixel(x, y);
            const double* g = grad.pixel(x, y);
            for (int c = 0; c < ch; ++c) {
                m[c] = b1 * m[c] + (1.0 - b1) * g[c];
                v[c] = b2 * v[c] + (1.0 - b2) * g[c] * g[c];
                double mhat = m[c] / bc1;
                double vhat = v[c] / bc2;
                t[c] -= lr * mhat / (std::sqrt(vhat) + eps);
            }
        }
    }
}

void stylize_scale(OptimState& state, const std::vector<PrecomputedViewpoint>& views,
                   const std::vector<const RotatedStyleDictionary*>& dicts,
                   Extractor& extractor, const TransferConfig& cfg, int scale_index,
                   std::vector<LossHistoryRow>& history,
                   std::vector<std::pair<std::string, ImageGrid>>* snapshots,
                   const ProgressFn& progress) {
    if (cfg.iterations == 0) return;
    if (views.empty()) throw TransferError("no viewpoints to optimize against");
    for (const RotatedStyleDictionary* d : dicts)
        if (!d->usable())
            throw TransferError("style dictionary for region " +
                                std::to_string(d->region_id) + " is empty");

    const int texw = state.texture.width(), texh = state.texture.height();
    Rng sched(derive_seed(cfg.seed, 0x5c4ed000ULL + static_cast<uint64_t>(scale_index)));
    std::vector<int> perm(views.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);

    for (int it = 0; it < cfg.iterations; ++it) {
        size_t pos = static_cast<size_t>(it) % views.size();
        if (pos == 0) sched.shuffle(perm);
        const PrecomputedViewpoint& view = views[perm[pos]];

        RenderResult render = sample_texture(state.texture, view.frag, Filter::Bilinear);
        FeatureMaps maps = extractor.forward(render.image);
        HypercolumnMap hc = downsample_features(maps, cfg.feature_downsample);
        DirectionalResult dres = nnfm_directional(
            hc, view.r_alpha, dicts, view.region.empty() ? nullptr : &view.region);
        TvResult tv = tv_loss(render.image, render.foreground);
        double total = total_loss(dres.loss, tv.value, cfg.lambda_tv);

        std::vector<Tensor> tap_grads =
            downsample_features_adjoint(hc, dres.grad, maps, cfg.feature_downsample);
        ImageGrid img_grad = extractor.backward(tap_grads);
        for (size_t i = 0; i < img_grad.size(); ++i)
            img_grad.data()[i] += cfg.lambda_tv * tv.grad.data()[i];
        ImageGrid tex_grad = scatter_gradient(img_grad, view.frag, texw, texh, Filter::Bilinear);
        adam_step(state, tex_grad, cfg.learning_rate);

        history.push_back({scale_index, it, perm[pos], dres.loss, tv.value, total,
                           dres.empty_bin_events});
        if (progress) progress(history.back());
        if (snapshots && cfg.snapshot_every > 0 && (it + 1) % cfg.snapshot_every == 0) {
            char name[64];
            std::snprintf(name, sizeof(name), "scale%d_iter%06d", scale_index, it + 1);
            snapshots->emplace_back(name, state.texture.clamped01());
        }
    }
}

ImageGrid multiscale_blend(const ImageGrid& optimized, const ImageGrid& original_colormatched,
                           double beta) {
    if (!optimized.same_shape(original_colormatched))
        throw TransferError("blend inputs must share dimensions");
    ImageGrid out(optimized.width(), optimized.height(), optimized.channels());
    for (size_t i = 0; i < out.size(); ++i)
        out.data()[i] = beta * original_colormatched.data()[i] + (1.0 - beta) * optimized.data()[i];
    return out;
}

RunArtifacts run(const RunInputs& in, const TransferConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    RunArtifacts art;
    Clock::time_point t_total = Clock::now();
    Clock::time_point t_stage = Clock::now();
    auto lap = [&](const std::string& name) {
        art.timings.emplace_back(name, seconds_since(t_stage));
        t_stage = Clock::now();
    };

    if (in.mesh.faces.empty()) throw TransferError("input stage: mesh has no faces");
    if (in.styles.empty()) throw TransferError("input stage: at least one style image is required");
    if (!in.style_masks.empty() && in.style_masks.size() != in.styles.size())
        throw TransferError("input stage: style mask list does not match the style list");
    if (in.guidance.empty()) throw TransferError("input stage: guidance texture is required");
    for (size_t s = 0; s < in.styles.size(); ++s)
        if (in.styles[s].channels() != 3)
            throw TransferError("input stage: style image " + std::to_string(s) + " must be RGB");

    // content texture
    ImageGrid content;
    if (cfg.random_init) {
        content = ImageGrid(cfg.texture_size, cfg.texture_size, 3);
        Rng noise(derive_seed(cfg.seed, 0x7e97ULL));
        for (size_t i = 0; i < content.size(); ++i) content.data()[i] = noise.uniform();
    } else {
        if (in.content.empty())
            throw TransferError("input stage: content texture is required unless random-init is set");
        if (in.content.channels() != 3)
            throw TransferError("input stage: content texture must be RGB");
        content = in.content;
    }
    const int texw = content.width(), texh = content.height();

    const int S = cfg.scales;
    const int f0 = 1 << (S - 1);
    if (texw / f0 < 2 || texh / f0 < 2)
        throw TransferError("config stage: too many scales for the texture size");
    if (cfg.render_size / f0 < cfg.feature_downsample)
        throw TransferError("config stage: too many scales for the render size");
    for (size_t s = 0; s < in.styles.size(); ++s)
        if (in.styles[s].width() / f0 < cfg.feature_downsample ||
            in.styles[s].height() / f0 < cfg.feature_downsample)
            throw TransferError("config stage: style image " + std::to_string(s) +
                                " is too small for the scale schedule");

    MaskGrid used = rasterize_uv_charts(in.mesh, texw, texh);
    if (used.count() == 0)
        throw TransferError("geometry stage: no texels are covered by the mesh UV charts");

    // style region routing
    const size_t n_styles = in.styles.size();
    ImageGrid region_index; // texel grid of 0-based style indices
    if (!in.regions.empty()) {
        ImageGrid rg = in.regions.channels() == 1 ? in.regions : in.regions.to_gray();
        if (rg.width() != texw || rg.height() != texh)
            rg = resize_nearest(rg, texw, texh);
        std::vector<int> levels = region_levels(rg, used, n_styles);
        region_index = ImageGrid(texw, texh, 1, 0.0);
        for (int y = 0; y < texh; ++y)
            for (int x = 0; x < texw; ++x) {
                int q = static_cast<int>(std::lround(std::clamp(rg.at(x, y), 0.0, 1.0) * 255.0));
                region_index.at(x, y) = nearest_level_index(q, levels);
            }
    } else if (n_styles > 1) {
        throw TransferError("input stage: multiple styles require a style-region texture");
    }

    // per-region color matching against each region's own style
    art.color_matched = content;
    for (size_t r = 0; r < n_styles; ++r) {
        MaskGrid sel(texw, texh);
        for (int y = 0; y < texh; ++y)
            for (int x = 0; x < texw; ++x) {
                bool in_region = region_index.empty() ||
                                 std::lround(region_index.at(x, y)) == static_cast<long>(r);
                sel.set(x, y, used.at(x, y) && in_region);
            }
        if (sel.count() < 2)
            throw TransferError("color-match stage: style region " + std::to_string(r) +
                                " covers fewer than 2 texels");
        MaskGrid style_sel;
        const MaskGrid* style_sel_p = nullptr;
        if (!in.style_masks.empty() && !in.style_masks[r].empty()) {
            const ImageGrid& m = in.style_masks[r];
            ImageGrid mg = m.channels() == 1 ? m : m.to_gray();
            if (mg.width() != in.styles[r].width() || mg.height() != in.styles[r].height())
                throw TransferError("color-match stage: style mask " + std::to_string(r) +
                                    " does not match its style image");
            style_sel = MaskGrid(mg.width(), mg.height());
            for (int y = 0; y < mg.height(); ++y)
                for (int x = 0; x < mg.width(); ++x) style_sel.set(x, y, mg.at(x, y) >= 0.5);
            style_sel_p = &style_sel;
        }
        std::vector<double> style_rgb = gather_pixels(in.styles[r], style_sel_p);
        if (style_rgb.size() < 6)
            throw TransferError("color-match stage: style image " + std::to_string(r) +
                                " has fewer than 2 usable pixels");
        ColorTransform t = solve_color_match(gather_pixels(content, &sel), style_rgb);
        art.color_matched = apply_color_match(art.color_matched, sel, t, true);
    }
    lap("color-match");

    // cameras: back the bounding sphere fully into the vertical field of view
    const Vec3 center = in.mesh.center();
    const double br = std::max(in.mesh.bounding_radius(), 1e-9);
    const double cam_vfov = 0.8;
    const double cam_dist = 1.05 * br / std::sin(cam_vfov * 0.5);
    std::vector<Camera> cams = fibonacci_viewpoints(cfg.viewpoints, center, cam_dist, cam_vfov);

    ImageGrid guidance_gray = in.guidance.channels() == 1 ? in.guidance : in.guidance.to_gray();

    Extractor extractor(cfg.extractor);
    ImageGrid prev_opt;
    MaskGrid final_trainable;

    for (int si = 0; si < S; ++si) {
        const int f = 1 << (S - 1 - si);
        const int rs = cfg.render_size / f;
        const int tw = texw / f, th = texh / f;
        const std::string tag = "scale " + std::to_string(si);

        std::vector<PrecomputedViewpoint> views = precompute_viewpoints(
            in.mesh, cams, guidance_gray, region_index.empty() ? nullptr : &region_index,
            cfg, rs, &art.warnings);
        lap(tag + ": viewpoints");

        std::vector<RotatedStyleDictionary> dict_store;
        dict_store.reserve(n_styles);
        for (size_t s = 0; s < n_styles; ++s) {
            ImageGrid style = f == 1 ? in.styles[s]
                                     : resize_bilinear(in.styles[s], in.styles[s].width() / f,
                                                       in.styles[s].height() / f);
            ImageGrid mask_scaled;
            const ImageGrid* mask_p = nullptr;
            if (!in.style_masks.empty() && !in.style_masks[s].empty()) {
                mask_scaled = f == 1 ? in.style_masks[s]
                                     : resize_bilinear(in.style_masks[s],
                                                       in.style_masks[s].width() / f,
                                                       in.style_masks[s].height() / f);
                mask_p = &mask_scaled;
            }

            bool loaded = false;
            std::string cache_path;
            if (!cfg.cache_dir.empty()) {
                uint64_t key = dictionary_content_key(style, mask_p, extractor, cfg.tau_step,
                                                      cfg.etf_style, cfg.feature_downsample);
                char hex[32];
                std::snprintf(hex, sizeof(hex), "%016llx",
                              static_cast<unsigned long long>(key));
                cache_path = cfg.cache_dir + "/texflow_dict_" + hex + ".bin";
                if (auto cached = RotatedStyleDictionary::load(cache_path)) {
                    dict_store.push_back(std::move(*cached));
                    loaded = true;
                }
            }
            if (!loaded) {
                RotatedStyleDictionary dict = build_style_dictionary(
                    style, mask_p, cfg.tau_step, cfg.etf_style, extractor,
                    cfg.feature_downsample);
                dict.region_id = static_cast<int>(s);
                if (!cache_path.empty()) dict.save(cache_path);
                dict_store.push_back(std::move(dict));
            }
            dict_store.back().region_id = static_cast<int>(s);
            if (!dict_store.back().usable())
                throw TransferError("dictionary stage: style " + std::to_string(s) +
                                    " produced no features (fully masked?)");
        }
        std::vector<const RotatedStyleDictionary*> dicts;
        for (const auto& d : dict_store) dicts.push_back(&d);
        lap(tag + ": dictionaries");

        ImageGrid cm_here = f == 1 ? art.color_matched : resize_bilinear(art.color_matched, tw, th);
        ImageGrid tex = si == 0 ? cm_here
                                : multiscale_blend(resize_bilinear(prev_opt, tw, th), cm_here,
                                                   cfg.beta);

        MaskGrid trainable = rasterize_uv_charts(in.mesh, tw, th);
        for (const PrecomputedViewpoint& v : views)
            accumulate_touched_texels(v.frag, Filter::Bilinear, trainable);

        OptimState state = make_optim_state(std::move(tex), std::move(trainable));
        stylize_scale(state, views, dicts, extractor, cfg, si, art.history,
                      cfg.snapshot_every > 0 ? &art.snapshots : nullptr, progress);
        lap(tag + ": optimize");

        prev_opt = std::move(state.texture);
        if (si == S - 1) {
            final_trainable = std::move(state.trainable);
            if (cfg.keep_debug) {
                for (PrecomputedViewpoint& v : views) {
                    art.debug_etf.push_back(std::move(v.debug_etf));
                    art.debug_distance.push_back(std::move(v.debug_distance));
                }
            }
        }
    }

    // composite: optimized values on trainable texels, everything else stays
    // bit-identical to the color-matched input
    art.texture = art.color_matched;
    for (int y = 0; y < texh; ++y)
        for (int x = 0; x < texw; ++x) {
            if (!final_trainable.at(x, y)) continue;
            const double* s = prev_opt.pixel(x, y);
            double* t = art.texture.pixel(x, y);
            for (int c = 0; c < art.texture.channels(); ++c)
                t[c] = std::clamp(s[c], 0.0, 1.0);
        }
    art.timings.emplace_back("total", seconds_since(t_total));
    return art;
}

} // namespace texflow
