// Acceptance gate for the stylization engine. Each criterion prints exactly
// one PASS/FAIL line with its pinned tolerances and measurements; the exit
// code is the number of failures. Oracles here are written independently of
// the library internals on purpose, even where a unit test has a twin.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fcntl.h>
#include <functional>
#include <string>
#include <unistd.h>
#include <vector>

#include "texflow/camera.hpp"
#include "texflow/cli.hpp"
#include "texflow/colormatch.hpp"
#include "texflow/dictionary.hpp"
#include "texflow/extractor.hpp"
#include "texflow/flowfield.hpp"
#include "texflow/hypercolumn.hpp"
#include "texflow/image.hpp"
#include "texflow/loss.hpp"
#include "texflow/mesh.hpp"
#include "texflow/png_io.hpp"
#include "texflow/raster.hpp"
#include "texflow/rng.hpp"
#include "texflow/transfer.hpp"

#include "oracles.hpp"
#include "synthetic.hpp"

using namespace texflow;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-12);
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof(buf), f, ap);
    va_end(ap);
    return buf;
}

uint64_t fnv1a_bytes(const void* data, size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = 1469598103934665603ULL;
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

HypercolumnMap make_hc(int w, int h, const std::vector<int>& layer_channels, uint64_t seed) {
    HypercolumnMap hc;
    hc.width = w;
    hc.height = h;
    hc.layer_channels = layer_channels;
    hc.dim = 0;
    for (int c : layer_channels) {
        hc.layer_offsets.push_back(hc.dim);
        hc.dim += c;
    }
    Rng rng(seed);
    hc.data.resize(static_cast<size_t>(w) * h * hc.dim);
    for (double& v : hc.data) v = rng.uniform(-1.0, 1.0);
    hc.layer_means = hc.means_over(nullptr);
    return hc;
}

RotatedStyleDictionary dict_of(double tau, int dim,
                               const std::vector<std::vector<double>>& per_bin,
                               const std::vector<std::vector<double>>& layer_means) {
    RotatedStyleDictionary d(tau, dim);
    d.layer_means = layer_means;
    std::vector<double> mu = flatten_means(layer_means);
    for (size_t b = 0; b < per_bin.size(); ++b) {
        size_t n = per_bin[b].size() / dim;
        for (size_t i = 0; i < n; ++i) {
            std::vector<double> v(dim);
            for (int k = 0; k < dim; ++k) v[k] = per_bin[b][i * dim + k] - mu[k];
            d.append(static_cast<int>(b), v.data());
        }
    }
    return d;
}

// Independent restatement of the directional loss, fallback rule included.
double oracle_directional(const HypercolumnMap& hc, const AngleSetImage& bins,
                          const std::vector<const RotatedStyleDictionary*>& dicts,
                          const std::vector<int32_t>* regions) {
    int dim = hc.dim;
    size_t ncells = hc.cells();
    std::vector<uint8_t> inc(ncells, 0);
    for (int y = 0; y < hc.height; ++y)
        for (int x = 0; x < hc.width; ++x)
            inc[static_cast<size_t>(y) * hc.width + x] =
                bins.bin(x, y) != AngleSetImage::kExcluded;

    std::vector<double> mu(dim, 0.0);
    size_t n = 0;
    for (size_t c = 0; c < ncells; ++c) {
        if (!inc[c]) continue;
        ++n;
        for (int k = 0; k < dim; ++k) mu[k] += hc.data[c * dim + k];
    }
    for (double& m : mu) m /= static_cast<double>(n);

    int B = bins.bins();
    double sum = 0.0;
    for (int y = 0; y < hc.height; ++y)
        for (int x = 0; x < hc.width; ++x) {
            size_t c = static_cast<size_t>(y) * hc.width + x;
            if (!inc[c]) continue;
            const RotatedStyleDictionary* d = dicts[regions ? (*regions)[c] : 0];
            int target = bins.bin(x, y);
            int best_bin = -1, best_d = 1 << 20;
            for (int b = 0; b < B; ++b) {
                if (d->bin_size(b) == 0) continue;
                int lin = std::abs(b - target);
                int circ = std::min(lin, B - lin);
                if (circ < best_d) { best_d = circ; best_bin = b; }
            }
            std::vector<double> q(dim);
            for (int k = 0; k < dim; ++k) q[k] = hc.data[c * dim + k] - mu[k];
            double best = 1e30;
            for (size_t i = 0; i < d->bin_size(best_bin); ++i)
                best = std::min(best, testsupport::oracle_cosdist(
                                          q.data(), d->bin_feature(best_bin, i), dim));
            sum += best;
        }
    return sum / static_cast<double>(n);
}

Mesh viewport_quad() {
    return parse_obj("v -1 -1 0\nv 1 -1 0\nv 1 1 0\nv -1 1 0\n"
                     "vt 0 1\nvt 1 1\nvt 1 0\nvt 0 0\n"
                     "f 1/1 2/2 3/3\nf 1/1 3/3 4/4\n",
                     "quad.obj");
}

Camera front_camera() {
    Camera cam;
    cam.position = {0, 0, 2};
    cam.target = {0, 0, 0};
    cam.vfov = 2.0 * std::atan(0.5);
    return cam;
}

int run_cli_quiet(std::vector<std::string> args, const std::string& log_path) {
    std::vector<std::string> store = std::move(args);
    store.insert(store.begin(), "texflow");
    std::vector<const char*> argv;
    for (const std::string& s : store) argv.push_back(s.c_str());

    std::fflush(stdout);
    std::fflush(stderr);
    int save_out = ::dup(1), save_err = ::dup(2);
    int log = ::open(log_path.c_str(), O_CREAT | O_WRONLY | O_TRUNC, 0644);
    ::dup2(log, 1);
    ::dup2(log, 2);
    int code = run_cli(static_cast<int>(argv.size()), argv.data());
    std::fflush(stdout);
    std::fflush(stderr);
    ::dup2(save_out, 1);
    ::dup2(save_err, 2);
    ::close(save_out);
    ::close(save_err);
    ::close(log);
    return code;
}

// ---------------------------------------------------------------- criterion 1
// All three matching losses agree with double-loop brute-force oracles to
// 1e-12 relative on 100 seeded random instances (<= 500 x 500 vectors,
// 3 layers), in under 30 seconds.
Outcome criterion_nnfm_oracles() {
    auto t0 = std::chrono::steady_clock::now();
    const double tol = 1e-12;
    double worst = 0.0;
    Rng master(1001);

    for (int inst = 0; inst < 100; ++inst) {
        std::vector<int> ch = {1 + static_cast<int>(master.below(8)),
                               1 + static_cast<int>(master.below(8)),
                               1 + static_cast<int>(master.below(8))};
        int dim = ch[0] + ch[1] + ch[2];
        int nr = 1 + static_cast<int>(master.below(500));
        int ns = 1 + static_cast<int>(master.below(500));
        Rng rng(derive_seed(2002, inst));

        // basic matching
        std::vector<double> fr(static_cast<size_t>(nr) * dim), fs(static_cast<size_t>(ns) * dim);
        for (double& v : fr) v = rng.uniform(-1.0, 1.0);
        for (double& v : fs) v = rng.uniform(-1.0, 1.0);
        worst = std::max(worst,
                         rel_err(nnfm_basic(fr, fs, dim), testsupport::oracle_nnfm(fr, fs, dim)));

        // mean-centered hypercolumn matching
        HypercolumnMap hc = make_hc(nr, 1, ch, derive_seed(2003, inst));
        std::vector<std::vector<double>> mu_s(3);
        for (int l = 0; l < 3; ++l) {
            mu_s[l].resize(ch[l]);
            for (double& v : mu_s[l]) v = rng.uniform(-0.5, 0.5);
        }
        std::vector<double> ms = flatten_means(mu_s);
        std::vector<double> mr = flatten_means(hc.means_over(nullptr));
        std::vector<double> cq = hc.data, cs = fs;
        for (int i = 0; i < nr; ++i)
            for (int k = 0; k < dim; ++k) cq[static_cast<size_t>(i) * dim + k] -= mr[k];
        for (int i = 0; i < ns; ++i)
            for (int k = 0; k < dim; ++k) cs[static_cast<size_t>(i) * dim + k] -= ms[k];
        worst = std::max(worst, rel_err(nnfm_hypercolumn(hc, fs, mu_s),
                                        testsupport::oracle_nnfm(cq, cs, dim)));

        // directional matching, 4 bins, sparse dictionaries, 1-2 regions
        const double tau = 45.0;
        AngleSetImage bins(nr, 1, tau);
        for (int x = 0; x < nr; ++x)
            bins.set_bin(x, 0, rng.uniform() < 0.1 ? AngleSetImage::kExcluded
                                                   : static_cast<int16_t>(rng.below(4)));
        bins.set_bin(0, 0, 0); // keep at least one included cell

        int n_regions = 1 + static_cast<int>(master.below(2));
        std::vector<RotatedStyleDictionary> store;
        std::vector<const RotatedStyleDictionary*> dicts;
        for (int r = 0; r < n_regions; ++r) {
            std::vector<std::vector<double>> per_bin(4);
            for (int b = 0; b < 4; ++b) {
                size_t cnt = master.below(2) ? master.below(1 + ns / 4) : 0;
                if (b == 0) cnt = std::max<size_t>(cnt, 1); // keep the dictionary usable
                per_bin[b].resize(cnt * dim);
                for (double& v : per_bin[b]) v = rng.uniform(-1.0, 1.0);
            }
            RotatedStyleDictionary d = dict_of(tau, dim, per_bin, mu_s);
            d.region_id = r;
            store.push_back(std::move(d));
        }
        for (const auto& d : store) dicts.push_back(&d);
        std::vector<int32_t> regions(hc.cells());
        for (auto& r : regions) r = static_cast<int32_t>(master.below(n_regions));

        DirectionalResult res = nnfm_directional(hc, bins, dicts, &regions);
        worst = std::max(worst, rel_err(res.loss, oracle_directional(hc, bins, dicts, &regions)));
    }

    double secs = seconds_since(t0);
    bool pass = worst <= tol && secs < 30.0;
    return {pass, fmt("max rel %.2e (tol %.0e), %.1fs (limit 30s)", worst, tol, secs)};
}

// ---------------------------------------------------------------- criterion 2
// With a single 180-degree bin the directional loss reduces exactly to the
// mean-centered hypercolumn loss on 20 random instances.
Outcome criterion_directional_reduction() {
    int exact = 0;
    Rng master(1101);
    for (int inst = 0; inst < 20; ++inst) {
        std::vector<int> ch = {1 + static_cast<int>(master.below(6)),
                               1 + static_cast<int>(master.below(6))};
        int nr = 1 + static_cast<int>(master.below(100));
        int ns = 1 + static_cast<int>(master.below(100));
        HypercolumnMap hc = make_hc(nr, 1, ch, derive_seed(2101, inst));
        Rng rng(derive_seed(2102, inst));
        std::vector<double> fs(static_cast<size_t>(ns) * hc.dim);
        for (double& v : fs) v = rng.uniform(-1.0, 1.0);
        std::vector<std::vector<double>> mu_s(2);
        for (int l = 0; l < 2; ++l) {
            mu_s[l].resize(ch[l]);
            for (double& v : mu_s[l]) v = rng.uniform(-0.5, 0.5);
        }

        RotatedStyleDictionary d = dict_of(180.0, hc.dim, {fs}, mu_s);
        AngleSetImage bins(nr, 1, 180.0);
        for (int x = 0; x < nr; ++x) bins.set_bin(x, 0, 0);

        double a = nnfm_directional(hc, bins, {&d}).loss;
        double b = nnfm_hypercolumn(hc, fs, mu_s);
        if (a == b) ++exact;
    }
    return {exact == 20, fmt("%d/20 instances bitwise equal", exact)};
}

// ---------------------------------------------------------------- criterion 3
// Color matching transfers the style's mean and covariance to 1e-6 relative
// (Frobenius) before clamping, on 50 random sample pairs.
Outcome criterion_color_moments() {
    const double tol = 1e-6;
    double worst = 0.0;
    Rng master(1201);
    for (int inst = 0; inst < 50; ++inst) {
        Rng rng(derive_seed(2201, inst));
        int nc = 4 + static_cast<int>(master.below(497));
        int ns = 4 + static_cast<int>(master.below(497));
        std::vector<double> c(static_cast<size_t>(nc) * 3), s(static_cast<size_t>(ns) * 3);
        for (double& v : c) v = rng.uniform(0.0, 1.0);
        for (double& v : s) v = rng.uniform(0.0, 1.0);

        ColorTransform t = solve_color_match(c, s);
        std::vector<double> mapped(c.size());
        for (size_t i = 0; i < c.size(); i += 3) t.apply(&c[i], &mapped[i]);

        testsupport::Moments3 got = testsupport::oracle_moments(mapped);
        testsupport::Moments3 want = testsupport::oracle_moments(s);

        double dm = 0, nm = 0, dc = 0, ncv = 0;
        for (int r = 0; r < 3; ++r) {
            dm += (got.mean[r] - want.mean[r]) * (got.mean[r] - want.mean[r]);
            nm += want.mean[r] * want.mean[r];
            for (int cc = 0; cc < 3; ++cc) {
                dc += (got.cov[r][cc] - want.cov[r][cc]) * (got.cov[r][cc] - want.cov[r][cc]);
                ncv += want.cov[r][cc] * want.cov[r][cc];
            }
        }
        worst = std::max(worst, std::sqrt(dm) / std::max(std::sqrt(nm), 1e-12));
        worst = std::max(worst, std::sqrt(dc) / std::max(std::sqrt(ncv), 1e-12));
    }
    return {worst <= tol, fmt("max rel moment error %.2e (tol %.0e)", worst, tol)};
}

// ---------------------------------------------------------------- criterion 4
// End-to-end analytic gradient (loss -> extractor backward -> scatter ->
// texture) vs central differences on a 16x16 texture and 24x24 render:
// rel err <= 1e-3 on >= 95% of 200 sampled texel channels, <= 1e-2 on all,
// under 2 minutes.
Outcome criterion_end_to_end_gradient() {
    auto t0 = std::chrono::steady_clock::now();
    const int TW = 16, RW = 24, d = 4, cells = RW / d;
    Mesh quad = viewport_quad();
    FragmentMap frag = rasterize(quad, front_camera(), RW, RW);

    Extractor ex(ExtractorSpec::builtin_default(11));
    const double tau = 45.0, lambda = 2e-5;

    AngleSetImage bins(cells, cells, tau);
    Rng brng(1301);
    for (int y = 0; y < cells; ++y)
        for (int x = 0; x < cells; ++x)
            bins.set_bin(x, y, brng.uniform() < 0.15 ? AngleSetImage::kExcluded
                                                     : static_cast<int16_t>(brng.below(4)));
    bins.set_bin(0, 0, 0);

    const int dim = 8 + 8 + 16 + 16; // builtin tap channels
    std::vector<std::vector<double>> per_bin(4);
    Rng drng(1302);
    for (auto& pb : per_bin) {
        pb.resize(8 * dim);
        for (double& v : pb) v = drng.uniform(-1.0, 1.0);
    }
    std::vector<std::vector<double>> zero_means = {
        std::vector<double>(8, 0.0), std::vector<double>(8, 0.0),
        std::vector<double>(16, 0.0), std::vector<double>(16, 0.0)};
    RotatedStyleDictionary dict = dict_of(tau, dim, per_bin, zero_means);
    std::vector<const RotatedStyleDictionary*> dicts = {&dict};

    ImageGrid tex = testsupport::random_image(TW, TW, 3, 1303);

    auto loss_of = [&](const ImageGrid& t) {
        RenderResult render = sample_texture(t, frag, Filter::Bilinear);
        FeatureMaps maps = ex.forward(render.image);
        HypercolumnMap hc = downsample_features(maps, d);
        double nnfm = nnfm_directional(hc, bins, dicts).loss;
        double tv = tv_loss(render.image, render.foreground).value;
        return total_loss(nnfm, tv, lambda);
    };

    // analytic pass
    RenderResult render = sample_texture(tex, frag, Filter::Bilinear);
    FeatureMaps maps = ex.forward(render.image);
    HypercolumnMap hc = downsample_features(maps, d);
    DirectionalResult dres = nnfm_directional(hc, bins, dicts);
    TvResult tv = tv_loss(render.image, render.foreground);
    std::vector<Tensor> tap_grads = downsample_features_adjoint(hc, dres.grad, maps, d);
    ImageGrid img_grad = ex.backward(tap_grads);
    for (size_t i = 0; i < img_grad.size(); ++i)
        img_grad.data()[i] += lambda * tv.grad.data()[i];
    ImageGrid tex_grad = scatter_gradient(img_grad, frag, TW, TW, Filter::Bilinear);

    const double eps = 1e-5;
    const int samples = 200;
    Rng pick(1304);
    int good = 0;
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
        size_t i = pick.below(tex.size());
        ImageGrid up = tex, dn = tex;
        up.data()[i] += eps;
        dn.data()[i] -= eps;
        double fd = (loss_of(up) - loss_of(dn)) / (2.0 * eps);
        double a = tex_grad.data()[i];
        double rel = std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
        worst = std::max(worst, rel);
        if (rel <= 1e-3) ++good;
    }
    double secs = seconds_since(t0);
    bool pass = good >= samples * 95 / 100 && worst <= 1e-2 && secs < 120.0;
    return {pass, fmt("%d/%d within 1e-3, worst %.2e (cap 1e-2), %.1fs (limit 120s)",
                      good, samples, worst, secs)};
}

// ---------------------------------------------------------------- criterion 5
// <sample(T), g> == <T, scatter(g)> to 1e-10 relative on 100 random
// instances, both filters.
Outcome criterion_adjoint_identity() {
    const double tol = 1e-10;
    double worst = 0.0;
    Rng master(1401);
    for (int inst = 0; inst < 100; ++inst) {
        int w = 1 + static_cast<int>(master.below(24));
        int h = 1 + static_cast<int>(master.below(24));
        int n = 1 + static_cast<int>(master.below(16));
        int ch = master.below(2) ? 3 : 1;
        Rng rng(derive_seed(2401, inst));

        FragmentMap frag(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (rng.uniform() < 0.7)
                    frag.set(x, y, rng.uniform(), rng.uniform(), 1.0 + rng.uniform());

        ImageGrid tex = testsupport::random_image(n, n, ch, rng.next());
        ImageGrid g = testsupport::random_image(w, h, ch, rng.next());

        for (Filter f : {Filter::Nearest, Filter::Bilinear}) {
            RenderResult r = sample_texture(tex, frag, f);
            ImageGrid back = scatter_gradient(g, frag, n, n, f);
            double lhs = 0.0, rhs = 0.0;
            for (size_t i = 0; i < r.image.size(); ++i) lhs += r.image.data()[i] * g.data()[i];
            for (size_t i = 0; i < tex.size(); ++i) rhs += tex.data()[i] * back.data()[i];
            worst = std::max(worst,
                             std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-30}));
        }
    }
    return {worst <= tol, fmt("max rel %.2e (tol %.0e)", worst, tol)};
}

// ---------------------------------------------------------------- criterion 6
// ETF recovers synthetic stripe angles {0,30,90,137} deg with params (10,10)
// on >= 99% of interior pixels within 2 degrees, and a (1,1) kernel leaves
// strictly more circular variance on a noisy stripe than (10,10).
Outcome criterion_etf_fixed_point() {
    const int N = 64, margin = 14;
    double worst_frac = 1.0;
    for (double deg : {0.0, 30.0, 90.0, 137.0}) {
        ImageGrid stripes = testsupport::stripe_image(N, N, deg, 10.0, 1);
        DirectionField field = etf(stripes, {10, 10});
        double want = deg * kPi / 180.0;
        int ok = 0, total = 0;
        for (int y = margin; y < N - margin; ++y)
            for (int x = margin; x < N - margin; ++x) {
                ++total;
                double delta = testsupport::orientation_delta(field.angle[field.idx(x, y)], want);
                if (delta <= 2.0 * kPi / 180.0) ++ok;
            }
        worst_frac = std::min(worst_frac, static_cast<double>(ok) / total);
    }

    ImageGrid noisy = testsupport::stripe_image(N, N, 30.0, 10.0, 1);
    Rng rng(1501);
    for (size_t i = 0; i < noisy.size(); ++i)
        noisy.data()[i] = std::clamp(noisy.data()[i] + rng.uniform(-0.35, 0.35), 0.0, 1.0);
    auto interior_variance = [&](const EtfParams& p) {
        DirectionField f = etf(noisy, p);
        std::vector<double> angles;
        for (int y = margin; y < N - margin; ++y)
            for (int x = margin; x < N - margin; ++x) angles.push_back(f.angle[f.idx(x, y)]);
        return testsupport::circular_variance(angles);
    };
    double var_small = interior_variance({1, 1});
    double var_big = interior_variance({10, 10});

    bool pass = worst_frac >= 0.99 && var_small > var_big;
    return {pass, fmt("worst stripe agreement %.1f%% (need 99%%); noisy circ-var %.3f (1,1) vs "
                      "%.3f (10,10)",
                      100.0 * worst_frac, var_small, var_big)};
}

// ---------------------------------------------------------------- criterion 7
// Orientation bins form a total partition (36 bins at tau=5, 4 at tau=45)
// and fold across the half turn over a 0.1-degree sweep.
Outcome criterion_angle_partition() {
    for (double tau : {5.0, 45.0}) {
        int B = bin_count(tau);
        if ((tau == 5.0 && B != 36) || (tau == 45.0 && B != 4))
            return {false, fmt("bin_count(%g) == %d", tau, B)};

        // 0.1-degree sweep, offset half a step so no sample sits on a bin
        // boundary: an angle one ulp from a boundary legitimately flips bins
        // when 180 degrees is added through a radian round-trip.
        std::vector<int> hits(B, 0);
        for (int k = 0; k < 1800; ++k) {
            double deg = 0.05 + 0.1 * k;
            int b = angle_bin(deg * kPi / 180.0, tau);
            if (b < 0 || b >= B) return {false, fmt("bin %d out of range at %g deg", b, deg)};
            int b2 = angle_bin((deg + 180.0) * kPi / 180.0, tau);
            if (b != b2) return {false, fmt("fold broken at %g deg: %d vs %d", deg, b, b2)};
            ++hits[b];
        }
        for (int b = 0; b < B; ++b)
            if (hits[b] == 0) return {false, fmt("bin %d never hit at tau %g", b, tau)};

        // dense random fold probes, rejecting only near-boundary angles
        Rng rng(1601);
        for (int i = 0; i < 20000; ++i) {
            double deg = rng.uniform(0.0, 180.0);
            double into = std::fmod(deg + tau * 0.5, tau);
            if (into < 1e-9 || tau - into < 1e-9) continue;
            if (angle_bin(deg * kPi / 180.0, tau) !=
                angle_bin((deg + 180.0) * kPi / 180.0, tau))
                return {false, fmt("fold broken at random %.12f deg", deg)};
        }
    }
    // boundary placement, probed one-path from each side
    if (angle_bin(179.0 * kPi / 180.0, 5.0) != 0 || angle_bin(1.0 * kPi / 180.0, 5.0) != 0 ||
        angle_bin(2.4 * kPi / 180.0, 5.0) != 0 || angle_bin(2.6 * kPi / 180.0, 5.0) != 1 ||
        angle_bin(7.4 * kPi / 180.0, 5.0) != 1 || angle_bin(7.6 * kPi / 180.0, 5.0) != 2)
        return {false, "bin boundary misplaced"};
    return {true, "36 + 4 bins, total partition, fold holds on 1800-sample sweep + "
                  "20000 random probes"};
}

// ---------------------------------------------------------------- criterion 8
// The distance transform equals exhaustive nearest-edge search exactly on
// 50 random 64x64 binaries.
Outcome criterion_edt_exact() {
    const int N = 64;
    for (int inst = 0; inst < 50; ++inst) {
        Rng rng(derive_seed(2801, inst));
        ImageGrid binary(N, N, 1, 0.0);
        std::vector<uint8_t> off_edge(static_cast<size_t>(N) * N, 0);
        for (int y = 0; y < N; ++y)
            for (int x = 0; x < N; ++x) {
                bool edge = rng.uniform() < 0.5;
                binary.at(x, y) = edge ? 1.0 : 0.0;
                off_edge[static_cast<size_t>(y) * N + x] = edge ? 0 : 1;
            }
        binary.at(0, 0) = 1.0; // keep at least one edge pixel
        off_edge[0] = 0;

        ImageGrid dist = edge_distance(binary);
        std::vector<double> want = testsupport::oracle_edt(off_edge, N, N);
        for (int y = 0; y < N; ++y)
            for (int x = 0; x < N; ++x)
                if (dist.at(x, y) != want[static_cast<size_t>(y) * N + x])
                    return {false, fmt("instance %d differs at (%d,%d): %.17g vs %.17g", inst, x,
                                       y, dist.at(x, y), want[static_cast<size_t>(y) * N + x])};
    }
    return {true, "50/50 instances bitwise equal to exhaustive search"};
}

// ---------------------------------------------------------------- criterion 9
// Desk-scale end-to-end run: UV sphere, 64^2 random-init texture, straight
// guidance lines, stripe style, builtin extractor, 8 viewpoints, 64^2
// renders, 2 scales x 50 iterations. Completes in < 5 minutes; the
// trailing-10 mean loss undercuts the leading-10 mean at each scale; on a
// held-out view >= 60% of foreground pixels show texture orientation within
// 15 degrees of the guidance direction.
Outcome criterion_desk_scale_run() {
    auto t0 = std::chrono::steady_clock::now();

    RunInputs in;
    in.mesh = parse_obj(testsupport::uv_sphere_obj(), "sphere.obj");
    in.guidance = testsupport::guidance_lines(64, 64, 16, 2);
    in.styles.push_back(testsupport::stripe_image(64, 64, 0.0, 8.0));

    TransferConfig cfg;
    cfg.random_init = true;
    cfg.texture_size = 64;
    cfg.render_size = 64;
    cfg.viewpoints = 8;
    cfg.iterations = 50;
    cfg.scales = 2;
    cfg.seed = 2024;
    cfg.extractor = ExtractorSpec::builtin_default(0);

    RunArtifacts art = run(in, cfg);
    double secs = seconds_since(t0);

    // loss trend per scale
    bool trend_ok = true;
    double lead[2] = {0, 0}, trail[2] = {0, 0};
    for (int s = 0; s < 2; ++s) {
        double leading = 0, trailing = 0;
        for (int i = 0; i < 10; ++i) {
            leading += art.history[static_cast<size_t>(s) * 50 + i].total;
            trailing += art.history[static_cast<size_t>(s) * 50 + 40 + i].total;
        }
        lead[s] = leading / 10.0;
        trail[s] = trailing / 10.0;
        if (!(trail[s] < lead[s])) trend_ok = false;
    }

    // held-out equatorial view, not among the 8 Fibonacci cameras
    const double cam_vfov = 0.8;
    const double dist = 1.05 * in.mesh.bounding_radius() / std::sin(cam_vfov * 0.5);
    Camera held;
    held.position = {in.mesh.center().x, in.mesh.center().y, in.mesh.center().z + dist};
    held.target = in.mesh.center();
    held.vfov = cam_vfov;

    FragmentMap frag = rasterize(in.mesh, held, 64, 64);
    MaskGrid fg = frag.foreground();
    RenderResult lines = sample_texture(in.guidance, frag, Filter::Nearest);
    ContourField ref = contour_direction_field(lines.image, fg, cfg.etf_contour, cfg.tau_step,
                                               cfg.dark_lines);
    RenderResult shown = sample_texture(art.texture, frag, Filter::Bilinear);
    DirectionField measured = etf(shown.image.to_gray(), cfg.etf_style);

    size_t aligned = 0, total = 0;
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            if (!fg.at(x, y)) continue;
            ++total;
            double delta = testsupport::orientation_delta(
                measured.angle[measured.idx(x, y)], ref.direction.angle[ref.direction.idx(x, y)]);
            if (delta <= 15.0 * kPi / 180.0) ++aligned;
        }
    double frac = total ? static_cast<double>(aligned) / total : 0.0;

    bool pass = secs < 300.0 && trend_ok && frac >= 0.60;
    return {pass, fmt("loss s0 %.4f->%.4f, s1 %.4f->%.4f; alignment %.1f%% (need 60%%); "
                      "%.0fs (limit 300s)",
                      lead[0], trail[0], lead[1], trail[1], 100.0 * frac, secs)};
}

// --------------------------------------------------------------- criterion 10
// Every ablation switch runs end-to-end at desk scale and yields a distinct
// output: tau=45, d=8, ETF (1,1) and (20,20), scales=1, beta in
// {0, 0.25, 0.95}, lr in {0.001, 0.1}, random-init.
Outcome criterion_ablation_matrix() {
    RunInputs base_in;
    base_in.mesh = parse_obj(testsupport::uv_sphere_obj(), "sphere.obj");
    base_in.content = testsupport::random_image(32, 32, 3, 3101);
    base_in.guidance = testsupport::guidance_lines(32, 32, 8, 2);
    base_in.styles.push_back(testsupport::stripe_image(32, 32, 30.0, 8.0));

    TransferConfig base;
    base.iterations = 4;
    base.scales = 2;
    base.viewpoints = 3;
    base.render_size = 32;
    base.texture_size = 32;
    base.etf_style = {3, 3};
    base.etf_contour = {3, 3};
    base.seed = 99;
    base.extractor = ExtractorSpec::builtin_default(0);

    std::vector<std::pair<std::string, TransferConfig>> variants;
    auto add = [&](const std::string& name, const std::function<void(TransferConfig&)>& tweak) {
        TransferConfig cfg = base;
        tweak(cfg);
        variants.emplace_back(name, cfg);
    };
    add("tau=45", [](TransferConfig& c) { c.tau_step = 45.0; });
    add("d=8", [](TransferConfig& c) { c.feature_downsample = 8; });
    add("etf=(1,1)", [](TransferConfig& c) { c.etf_style = {1, 1}; });
    add("etf=(20,20)", [](TransferConfig& c) { c.etf_style = {20, 20}; });
    add("scales=1", [](TransferConfig& c) { c.scales = 1; });
    add("beta=0", [](TransferConfig& c) { c.beta = 0.0; });
    add("beta=0.25", [](TransferConfig& c) { c.beta = 0.25; });
    add("beta=0.95", [](TransferConfig& c) { c.beta = 0.95; });
    add("lr=0.001", [](TransferConfig& c) { c.learning_rate = 0.001; });
    add("lr=0.1", [](TransferConfig& c) { c.learning_rate = 0.1; });
    add("random-init", [](TransferConfig& c) { c.random_init = true; });

    std::vector<uint64_t> hashes;
    for (const auto& [name, cfg] : variants) {
        try {
            RunArtifacts art = run(base_in, cfg);
            hashes.push_back(fnv1a_bytes(art.texture.data(),
                                         art.texture.size() * sizeof(double)));
        } catch (const std::exception& e) {
            return {false, fmt("variant %s failed: %s", name.c_str(), e.what())};
        }
    }
    for (size_t i = 0; i < hashes.size(); ++i)
        for (size_t j = i + 1; j < hashes.size(); ++j)
            if (hashes[i] == hashes[j])
                return {false, fmt("variants %s and %s hash identically",
                                   variants[i].first.c_str(), variants[j].first.c_str())};
    return {true, fmt("%zu/11 ablation variants ran; all output hashes distinct",
                      hashes.size())};
}

// --------------------------------------------------------------- criterion 11
// With a two-region routing texture and two orthogonal stripe styles, the
// match provenance records zero cross-region matches.
Outcome criterion_region_provenance() {
    const double tau = 45.0;
    const int R = 32, d = 4, cells = R / d;

    Extractor ex(ExtractorSpec::builtin_default(0));
    ImageGrid style_h = testsupport::stripe_image(32, 32, 0.0, 8.0);
    ImageGrid style_v = testsupport::stripe_image(32, 32, 90.0, 8.0);
    RotatedStyleDictionary d0 = build_style_dictionary(style_h, nullptr, tau, {3, 3}, ex, d);
    RotatedStyleDictionary d1 = build_style_dictionary(style_v, nullptr, tau, {3, 3}, ex, d);
    d0.region_id = 0;
    d1.region_id = 1;

    Mesh quad = viewport_quad();
    ImageGrid guidance(R, R, 1, 1.0);
    for (int y = 0; y < R; ++y) guidance.at(16, y) = 0.0;
    ImageGrid region_index(R, R, 1, 0.0);
    for (int y = 0; y < R; ++y)
        for (int x = 16; x < R; ++x) region_index.at(x, y) = 1.0;

    TransferConfig cfg;
    cfg.tau_step = tau;
    cfg.etf_contour = {3, 3};
    cfg.feature_downsample = d;
    std::vector<PrecomputedViewpoint> views = precompute_viewpoints(
        quad, {front_camera()}, guidance, &region_index, cfg, R, nullptr);

    ImageGrid tex = testsupport::random_image(R, R, 3, 3201);
    RenderResult render = sample_texture(tex, views[0].frag, Filter::Bilinear);
    HypercolumnMap hc = downsample_features(ex.forward(render.image), d);
    DirectionalResult res =
        nnfm_directional(hc, views[0].r_alpha, {&d0, &d1}, &views[0].region);

    size_t included = 0, cross = 0;
    for (int cy = 0; cy < cells; ++cy)
        for (int cx = 0; cx < cells; ++cx) {
            size_t c = static_cast<size_t>(cy) * cells + cx;
            if (res.matched_bin[c] == -1) continue;
            ++included;
            if (res.matched_region[c] != views[0].region[c]) ++cross;
        }
    bool pass = included > 0 && cross == 0;
    return {pass, fmt("%zu matched cells, %zu cross-region matches (need 0)", included, cross)};
}

// --------------------------------------------------------------- criterion 12
// Two runs from the same manifest produce bit-identical texture.png.
Outcome criterion_manifest_reproducibility() {
    std::string dir = testsupport::scratch_dir("acceptance_repro");
    testsupport::write_text(dir + "/mesh.obj", testsupport::uv_sphere_obj());
    save_png(testsupport::random_image(32, 32, 3, 3301), dir + "/content.png");
    save_png(testsupport::guidance_lines(32, 32, 8, 2), dir + "/guidance.png");
    save_png(testsupport::stripe_image(32, 32, 30.0, 8.0), dir + "/style.png");

    std::vector<std::string> args = {
        "--mesh",        dir + "/mesh.obj",     "--texture",     dir + "/content.png",
        "--guidance",    dir + "/guidance.png", "--style",       dir + "/style.png",
        "--out",         dir + "/out1",         "--iterations",  "3",
        "--scales",      "1",                   "--viewpoints",  "2",
        "--render-size", "32",                  "--tau",         "45",
        "--etf-style",   "3:3",                 "--etf-contour", "3:3",
        "--seed",        "77"};
    if (run_cli_quiet(args, dir + "/log1.txt") != 0) return {false, "initial run failed"};

    std::string manifest = dir + "/out1/manifest.txt";
    if (run_cli_quiet({"--config", manifest, "--out", dir + "/out2"}, dir + "/log2.txt") != 0)
        return {false, "first replay failed"};
    if (run_cli_quiet({"--config", manifest, "--out", dir + "/out3"}, dir + "/log3.txt") != 0)
        return {false, "second replay failed"};

    std::string t1 = testsupport::read_bytes(dir + "/out1/texture.png");
    std::string t2 = testsupport::read_bytes(dir + "/out2/texture.png");
    std::string t3 = testsupport::read_bytes(dir + "/out3/texture.png");
    bool pass = !t1.empty() && t1 == t2 && t2 == t3;
    return {pass, pass ? fmt("3 runs, %zu bytes, bit-identical", t1.size())
                       : "texture bytes differ between replays"};
}

} // namespace

int main() {
    struct Entry {
        const char* name;
        Outcome (*fn)();
    };
    const Entry entries[] = {
        {"nnfm oracle equivalence", criterion_nnfm_oracles},
        {"directional reduction at tau=180", criterion_directional_reduction},
        {"color matching moments", criterion_color_moments},
        {"end-to-end gradient", criterion_end_to_end_gradient},
        {"sample/scatter adjoint identity", criterion_adjoint_identity},
        {"ETF stripe fixed point", criterion_etf_fixed_point},
        {"angle-set partition", criterion_angle_partition},
        {"distance transform exactness", criterion_edt_exact},
        {"desk-scale end-to-end", criterion_desk_scale_run},
        {"ablation switches runnable", criterion_ablation_matrix},
        {"multi-style region provenance", criterion_region_provenance},
        {"manifest reproducibility", criterion_manifest_reproducibility},
    };

    int failures = 0;
    int id = 0;
    for (const Entry& e : entries) {
        ++id;
        Outcome r;
        try {
            r = e.fn();
        } catch (const std::exception& ex) {
            r = {false, fmt("exception: %s", ex.what())};
        }
        if (!r.pass) ++failures;
        std::printf("criterion %2d %s  %-34s %s\n", id, r.pass ? "PASS" : "FAIL", e.name,
                    r.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/12 criteria passed\n", 12 - failures);
    return failures;
}
