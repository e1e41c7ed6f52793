#include "texflow/cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "texflow/parallel.hpp"
#include "texflow/png_io.hpp"

namespace texflow {

namespace {

constexpr const char* kVersion = "texflow 0.1.0";

void build_app(CLI::App& app, RunOptions& opt) {
    app.description("Guided texture stylization of UV-mapped meshes");
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "key=value configuration file (a manifest.txt works); "
                                   "command-line flags override file entries");

    app.add_option("--mesh", opt.mesh_path, "UV-mapped OBJ mesh")->required();
    app.add_option("--texture", opt.texture_path, "content texture PNG (omit with --random-init)");
    app.add_option("--guidance", opt.guidance_path, "guidance line texture PNG")->required();
    app.add_option("--style", opt.styles, "style image PNG, optionally PATH:MASK; repeatable")
        ->required();
    app.add_option("--style-regions", opt.regions_path,
                   "region texture routing texels to styles (required for multiple styles)");
    app.add_option("--out", opt.out_dir, "output directory")->capture_default_str();

    app.add_option("--tau", opt.tau, "angle tolerance in degrees (bin width)")
        ->capture_default_str();
    app.add_option("--lambda-tv", opt.lambda_tv, "total-variation weight")
        ->capture_default_str();
    app.add_option("--lr", opt.lr, "Adam learning rate")->capture_default_str();
    app.add_option("--iterations", opt.iterations, "iterations per multiscale step")
        ->capture_default_str();
    app.add_option("--scales", opt.scales, "multiscale steps (1 disables multiscale)")
        ->capture_default_str();
    app.add_option("--beta", opt.beta, "blend weight of the original texture between scales")
        ->capture_default_str();
    app.add_option("--viewpoints", opt.viewpoints, "number of Fibonacci-sphere viewpoints")
        ->capture_default_str();
    app.add_option("--render-size", opt.render_size, "render resolution (square)")
        ->capture_default_str();
    app.add_option("--texture-size", opt.texture_size,
                   "texture resolution for --random-init runs")
        ->capture_default_str();
    app.add_option("--feature-downsample", opt.feature_downsample,
                   "hypercolumn grid downsample factor d")
        ->capture_default_str();
    app.add_option("--etf-style", opt.etf_style, "style ETF as RADIUS:ITERATIONS")
        ->capture_default_str();
    app.add_option("--etf-contour", opt.etf_contour, "contour ETF as RADIUS:ITERATIONS")
        ->capture_default_str();
    app.add_option("--seed", opt.seed, "seed for every random stream")->capture_default_str();
    app.add_option("--extractor", opt.extractor,
                   "feature extractor: builtin:SEED or file:PATH (VGG-16 prefix weights)")
        ->capture_default_str();
    app.add_flag("--random-init", opt.random_init, "start from seeded uniform noise");
    app.add_flag("--light-lines", opt.light_lines,
                 "guidance lines are lighter than their surround (default: darker)");
    app.add_flag("--debug", opt.debug, "write per-view ETF/distance images and extras");
    app.add_option("--threads", opt.threads, "worker threads (0 = hardware)")
        ->capture_default_str();
    app.add_option("--snapshot-every", opt.snapshot_every,
                   "write a texture snapshot every N iterations (0 = off)")
        ->capture_default_str();
    app.add_option("--cache-dir", opt.cache_dir, "style dictionary cache directory")
        ->capture_default_str();
}

std::pair<int, int> parse_radius_iters(const std::string& s, const char* flag) {
    size_t colon = s.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= s.size())
        throw TransferError(std::string(flag) + " expects RADIUS:ITERATIONS, got '" + s + "'");
    try {
        size_t p1 = 0, p2 = 0;
        int r = std::stoi(s.substr(0, colon), &p1);
        int i = std::stoi(s.substr(colon + 1), &p2);
        if (p1 != colon || p2 != s.size() - colon - 1) throw std::invalid_argument("");
        return {r, i};
    } catch (const std::exception&) {
        throw TransferError(std::string(flag) + " expects RADIUS:ITERATIONS, got '" + s + "'");
    }
}

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return 0;
    uint64_t h = 1469598103934665603ULL;
    char buf[65536];
    while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
        std::streamsize n = f.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!f) break;
    }
    return h;
}

ImageGrid expand_rgb(ImageGrid img) {
    if (img.channels() == 3) return img;
    ImageGrid out(img.width(), img.height(), 3);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            double v = img.at(x, y);
            double* p = out.pixel(x, y);
            p[0] = p[1] = p[2] = v;
        }
    return out;
}

void split_style_arg(const std::string& arg, std::string& path, std::string& mask) {
    size_t colon = arg.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 >= arg.size()) {
        path = arg;
        mask.clear();
    } else {
        path = arg.substr(0, colon);
        mask = arg.substr(colon + 1);
    }
}

} // namespace

bool parse_cli(int argc, const char* const* argv, RunOptions& opt, int& exit_code,
               std::string& message, std::string* manifest_config) {
    CLI::App app{"texflow"};
    build_app(app, opt);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        exit_code = e.get_exit_code();
        std::ostringstream out;
        if (exit_code == 0) {
            out << app.help();
            if (std::string(e.get_name()) == "CallForVersion") {
                std::ostringstream v;
                v << kVersion << "\n";
                message = v.str();
                return false;
            }
        } else {
            out << e.what();
        }
        message = out.str();
        return false;
    }
    if (manifest_config) *manifest_config = app.config_to_str(true, false);
    exit_code = 0;
    return true;
}

TransferConfig make_transfer_config(const RunOptions& opt) {
    TransferConfig cfg;
    cfg.tau_step = opt.tau;
    cfg.lambda_tv = opt.lambda_tv;
    cfg.learning_rate = opt.lr;
    cfg.iterations = opt.iterations;
    cfg.scales = opt.scales;
    cfg.beta = opt.beta;
    cfg.viewpoints = opt.viewpoints;
    cfg.render_size = opt.render_size;
    cfg.texture_size = opt.texture_size;
    cfg.feature_downsample = opt.feature_downsample;
    auto es = parse_radius_iters(opt.etf_style, "--etf-style");
    cfg.etf_style = {es.first, es.second};
    auto ec = parse_radius_iters(opt.etf_contour, "--etf-contour");
    cfg.etf_contour = {ec.first, ec.second};
    cfg.seed = opt.seed;
    cfg.dark_lines = !opt.light_lines;
    cfg.random_init = opt.random_init;
    cfg.snapshot_every = opt.snapshot_every;
    cfg.keep_debug = opt.debug;
    cfg.cache_dir = opt.cache_dir;

    const std::string& ex = opt.extractor;
    if (ex.rfind("builtin:", 0) == 0) {
        std::string seed_str = ex.substr(8);
        try {
            size_t pos = 0;
            unsigned long long s = std::stoull(seed_str, &pos);
            if (pos != seed_str.size()) throw std::invalid_argument("");
            cfg.extractor = ExtractorSpec::builtin_default(s);
        } catch (const std::exception&) {
            throw TransferError("--extractor builtin:SEED needs an integer seed, got '" + ex + "'");
        }
    } else if (ex.rfind("file:", 0) == 0) {
        std::string path = ex.substr(5);
        if (path.empty()) throw TransferError("--extractor file:PATH needs a path");
        cfg.extractor = ExtractorSpec::vgg16_prefix(path);
    } else {
        throw TransferError("--extractor expects builtin:SEED or file:PATH, got '" + ex + "'");
    }
    return cfg;
}

RunInputs load_run_inputs(const RunOptions& opt, std::vector<std::string>& warnings) {
    RunInputs in;
    in.mesh = load_mesh(opt.mesh_path);
    if (!opt.texture_path.empty()) {
        if (opt.random_init)
            warnings.push_back("content texture ignored because --random-init is set");
        else
            in.content = expand_rgb(load_png(opt.texture_path, &warnings));
    }
    in.guidance = load_png(opt.guidance_path, &warnings);
    if (in.guidance.channels() == 3) in.guidance = in.guidance.to_gray();
    if (!opt.regions_path.empty()) {
        in.regions = load_png(opt.regions_path, &warnings);
        if (in.regions.channels() == 3) in.regions = in.regions.to_gray();
    }
    for (const std::string& arg : opt.styles) {
        std::string path, mask;
        split_style_arg(arg, path, mask);
        in.styles.push_back(expand_rgb(load_png(path, &warnings)));
        if (mask.empty()) {
            in.style_masks.emplace_back();
        } else {
            ImageGrid m = load_png(mask, &warnings);
            in.style_masks.push_back(m.channels() == 3 ? m.to_gray() : std::move(m));
        }
    }
    return in;
}

int run_cli(int argc, const char* const* argv) {
    RunOptions opt;
    int exit_code = 0;
    std::string message, manifest_config;
    if (!parse_cli(argc, argv, opt, exit_code, message, &manifest_config)) {
        std::FILE* sink = exit_code == 0 ? stdout : stderr;
        std::fprintf(sink, "%s\n", message.c_str());
        return exit_code;
    }

    namespace fs = std::filesystem;
    try {
        set_worker_threads(opt.threads);
        TransferConfig cfg = make_transfer_config(opt);
        std::vector<std::string> warnings;
        RunInputs inputs = load_run_inputs(opt, warnings);
        for (const std::string& w : warnings)
            std::fprintf(stderr, "texflow: warning: %s\n", w.c_str());

        if (!cfg.cache_dir.empty()) fs::create_directories(cfg.cache_dir);

        int report_every = std::max(1, cfg.iterations / 10);
        ProgressFn progress = [&](const LossHistoryRow& row) {
            if ((row.iteration + 1) % report_every != 0) return;
            std::fprintf(stderr,
                         "scale %d iter %5d  view %3d  nnfm %.6f  tv %.6f  total %.6f\n",
                         row.scale, row.iteration + 1, row.viewpoint, row.nnfm, row.tv,
                         row.total);
        };

        RunArtifacts art = run(inputs, cfg, progress);
        for (const std::string& w : art.warnings)
            std::fprintf(stderr, "texflow: warning: %s\n", w.c_str());

        fs::create_directories(opt.out_dir);
        const std::string out = opt.out_dir;
        save_png(art.texture, out + "/texture.png");

        {
            std::ofstream csv(out + "/loss.csv");
            if (!csv) throw TransferError("output stage: cannot write " + out + "/loss.csv");
            csv << "iteration,scale,viewpoint,nnfm,tv,total,empty_bins\n";
            char line[256];
            for (const LossHistoryRow& r : art.history) {
                std::snprintf(line, sizeof(line), "%d,%d,%d,%.17g,%.17g,%.17g,%zu\n",
                              r.iteration, r.scale, r.viewpoint, r.nnfm, r.tv, r.total,
                              r.empty_bin_events);
                csv << line;
            }
        }

        {
            std::ofstream mf(out + "/manifest.txt");
            if (!mf) throw TransferError("output stage: cannot write " + out + "/manifest.txt");
            mf << "# " << kVersion << "\n";
            mf << manifest_config;
            char line[512];
            auto put_hash = [&](const char* name, const std::string& path) {
                if (path.empty()) return;
                std::snprintf(line, sizeof(line), "# input %s %s fnv1a=%016" PRIx64 "\n",
                              name, path.c_str(), fnv1a_file(path));
                mf << line;
            };
            put_hash("mesh", opt.mesh_path);
            if (!opt.random_init) put_hash("texture", opt.texture_path);
            put_hash("guidance", opt.guidance_path);
            put_hash("style-regions", opt.regions_path);
            for (const std::string& arg : opt.styles) {
                std::string path, mask;
                split_style_arg(arg, path, mask);
                put_hash("style", path);
                put_hash("style-mask", mask);
            }
            for (const auto& [stage, secs] : art.timings) {
                std::snprintf(line, sizeof(line), "# timing %s = %.3fs\n", stage.c_str(), secs);
                mf << line;
            }
        }

        if (opt.debug) {
            const std::string dbg = out + "/debug";
            fs::create_directories(dbg);
            save_png(art.color_matched, dbg + "/color_matched.png");
            char name[64];
            for (size_t i = 0; i < art.debug_etf.size(); ++i) {
                if (art.debug_etf[i].empty()) continue;
                std::snprintf(name, sizeof(name), "/etf_view%03zu.png", i);
                save_png(art.debug_etf[i], dbg + name);
                std::snprintf(name, sizeof(name), "/distance_view%03zu.png", i);
                save_png(art.debug_distance[i], dbg + name);
            }
        }
        for (const auto& [name, img] : art.snapshots) {
            const std::string dbg = out + "/debug";
            fs::create_directories(dbg);
            save_png(img, dbg + "/snapshot_" + name + ".png");
        }

        for (const auto& [stage, secs] : art.timings)
            std::fprintf(stdout, "%-24s %9.2fs\n", stage.c_str(), secs);
        std::fprintf(stdout, "wrote %s/texture.png\n", out.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "texflow: error: %s\n", e.what());
        return 1;
    }
}

} // namespace texflow
