#include "texflow/dictionary.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <memory>

namespace texflow {

size_t RotatedStyleDictionary::total_features() const {
    size_t n = 0;
    for (const auto& bin : features_) n += bin.size();
    return dim_ > 0 ? n / dim_ : 0;
}

namespace {

// cells kept after downsampling a binary pixel mask: average coverage >= 0.5
std::vector<uint8_t> downsample_mask(const std::vector<uint8_t>& pix, int w, int h,
                                     int gw, int gh) {
    std::vector<double> src(pix.size());
    for (size_t i = 0; i < pix.size(); ++i) src[i] = pix[i] ? 1.0 : 0.0;
    std::vector<double> dst(static_cast<size_t>(gw) * gh);
    resize_bilinear(src.data(), w, h, 1, dst.data(), gw, gh);
    std::vector<uint8_t> out(dst.size());
    for (size_t i = 0; i < dst.size(); ++i) out[i] = dst[i] >= 0.5 ? 1 : 0;
    return out;
}

std::vector<uint8_t> binarize(const ImageGrid& mask) {
    ImageGrid g = mask.channels() == 1 ? mask : mask.to_gray();
    std::vector<uint8_t> out(static_cast<size_t>(g.width()) * g.height());
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x)
            out[static_cast<size_t>(y) * g.width() + x] = g.at(x, y) >= 0.5 ? 1 : 0;
    return out;
}

struct FileCloser {
    void operator()(std::FILE* f) const { if (f) std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

template <typename T>
bool write_pod(std::FILE* f, const T& v) {
    return std::fwrite(&v, sizeof(T), 1, f) == 1;
}

template <typename T>
bool read_pod(std::FILE* f, T& v) {
    return std::fread(&v, sizeof(T), 1, f) == 1;
}

constexpr char kMagic[4] = {'T', 'F', 'D', '1'};

} // namespace

void RotatedStyleDictionary::save(const std::string& path) const {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw ExtractorError("cannot write dictionary cache: " + path);
    std::FILE* fp = f.get();
    bool ok = std::fwrite(kMagic, 1, 4, fp) == 4;
    ok = ok && write_pod(fp, tau_step_);
    ok = ok && write_pod(fp, static_cast<uint32_t>(bins_));
    ok = ok && write_pod(fp, static_cast<uint32_t>(dim_));
    ok = ok && write_pod(fp, static_cast<int32_t>(region_id));
    ok = ok && write_pod(fp, static_cast<uint32_t>(layer_means.size()));
    for (const auto& m : layer_means) {
        ok = ok && write_pod(fp, static_cast<uint32_t>(m.size()));
        ok = ok && std::fwrite(m.data(), sizeof(double), m.size(), fp) == m.size();
    }
    for (const auto& bin : features_) {
        ok = ok && write_pod(fp, static_cast<uint64_t>(bin.size() / dim_));
        ok = ok && std::fwrite(bin.data(), sizeof(double), bin.size(), fp) == bin.size();
    }
    if (!ok) throw ExtractorError("short write to dictionary cache: " + path);
}

std::optional<RotatedStyleDictionary> RotatedStyleDictionary::load(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) return std::nullopt;
    std::FILE* fp = f.get();
    char magic[4];
    if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, kMagic, 4) != 0)
        return std::nullopt;
    double tau = 0;
    uint32_t bins = 0, dim = 0, nlayers = 0;
    int32_t region = 0;
    if (!read_pod(fp, tau) || !read_pod(fp, bins) || !read_pod(fp, dim) ||
        !read_pod(fp, region) || !read_pod(fp, nlayers))
        return std::nullopt;
    if (tau <= 0 || bins == 0 || dim == 0) return std::nullopt;

    RotatedStyleDictionary out(tau, static_cast<int>(dim));
    if (out.bins() != static_cast<int>(bins)) return std::nullopt;
    out.region_id = region;
    out.layer_means.resize(nlayers);
    for (auto& m : out.layer_means) {
        uint32_t n = 0;
        if (!read_pod(fp, n)) return std::nullopt;
        m.resize(n);
        if (std::fread(m.data(), sizeof(double), n, fp) != n) return std::nullopt;
    }
    for (int b = 0; b < out.bins(); ++b) {
        uint64_t count = 0;
        if (!read_pod(fp, count)) return std::nullopt;
        auto& bin = out.features_[b];
        bin.resize(count * dim);
        if (std::fread(bin.data(), sizeof(double), bin.size(), fp) != bin.size())
            return std::nullopt;
    }
    return out;
}

RotatedStyleDictionary build_style_dictionary(const ImageGrid& style,
                                              const ImageGrid* partial_mask,
                                              double tau_step,
                                              const EtfParams& etf_params,
                                              Extractor& extractor, int d) {
    if (style.channels() != 3)
        throw ExtractorError("style image must have 3 channels");
    int w = style.width(), h = style.height();
    if (partial_mask && (partial_mask->width() != w || partial_mask->height() != h))
        throw ExtractorError("style mask dimensions do not match the style image");

    const int B = bin_count(tau_step);
    DirectionField field = etf(style.to_gray(), etf_params);
    AngleSetImage ia = discretize_angles(field, tau_step);

    std::vector<uint8_t> mask_pix;
    if (partial_mask) mask_pix = binarize(*partial_mask);

    // unrotated pass fixes the grid size and the centering means
    FeatureMaps maps0 = extractor.forward(style);
    HypercolumnMap hc0 = downsample_features(maps0, d);
    const int gw = hc0.width, gh = hc0.height;
    const size_t ncells = hc0.cells();

    auto cell_mask_of = [&](const std::vector<uint8_t>& pix) {
        return downsample_mask(pix, w, h, gw, gh);
    };

    std::vector<uint8_t> keep0(ncells, 1);
    if (partial_mask) keep0 = cell_mask_of(mask_pix);

    RotatedStyleDictionary dict(tau_step, hc0.dim);
    dict.layer_means = hc0.means_over(partial_mask ? &keep0 : nullptr);

    std::vector<double> mu(hc0.dim, 0.0);
    {
        int off = 0;
        for (size_t l = 0; l < dict.layer_means.size(); ++l) {
            for (double v : dict.layer_means[l]) mu[off++] = v;
        }
    }

    std::vector<double> centered(hc0.dim);
    auto collect = [&](const HypercolumnMap& hc, const AngleSetImage& ia_rot,
                       const std::vector<uint8_t>& keep, int shift) {
        for (int cy = 0; cy < gh; ++cy) {
            for (int cx = 0; cx < gw; ++cx) {
                size_t ci = static_cast<size_t>(cy) * gw + cx;
                if (!keep[ci]) continue;
                int px = cell_to_pixel(cx, gw, w), py = cell_to_pixel(cy, gh, h);
                int beta = ia_rot.bin(px, py);
                if (beta == AngleSetImage::kExcluded) continue;
                const double* v = hc.cell(cx, cy);
                for (int k = 0; k < hc.dim; ++k) centered[k] = v[k] - mu[k];
                dict.append((beta + shift) % B, centered.data());
            }
        }
    };

    collect(hc0, ia, keep0, 0);

    for (int r = 1; r < B; ++r) {
        double angle = r * tau_step;
        RotatedImage rot = rotate_image(style, angle, Filter::Bilinear);
        AngleSetImage ia_rot = rotate_bins(ia, angle);

        std::vector<uint8_t> keep_pix = rot.valid.data;
        if (partial_mask) {
            RotatedImage mrot = rotate_image(*partial_mask, angle, Filter::Nearest);
            std::vector<uint8_t> mbin = binarize(mrot.image);
            for (size_t i = 0; i < keep_pix.size(); ++i)
                keep_pix[i] = keep_pix[i] && mbin[i] && mrot.valid.data[i];
        }
        std::vector<uint8_t> keep = cell_mask_of(keep_pix);

        FeatureMaps maps = extractor.forward(rot.image);
        HypercolumnMap hc = downsample_features(maps, d);
        collect(hc, ia_rot, keep, r);
    }
    return dict;
}

namespace {

struct Fnv1a {
    uint64_t h = 1469598103934665603ULL;
    void bytes(const void* p, size_t n) {
        const unsigned char* b = static_cast<const unsigned char*>(p);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    }
    template <typename T>
    void pod(const T& v) { bytes(&v, sizeof(T)); }
};

} // namespace

uint64_t dictionary_content_key(const ImageGrid& style, const ImageGrid* partial_mask,
                                const Extractor& extractor, double tau_step,
                                const EtfParams& etf_params, int d) {
    Fnv1a f;
    f.pod(style.width());
    f.pod(style.height());
    f.pod(style.channels());
    f.bytes(style.data(), style.size() * sizeof(double));
    f.pod(partial_mask != nullptr);
    if (partial_mask) {
        f.pod(partial_mask->width());
        f.pod(partial_mask->height());
        f.pod(partial_mask->channels());
        f.bytes(partial_mask->data(), partial_mask->size() * sizeof(double));
    }
    const ExtractorSpec& spec = extractor.spec();
    f.pod(spec.layers.size());
    for (const LayerSpec& l : spec.layers) {
        f.pod(static_cast<int>(l.kind));
        f.pod(l.out_channels);
    }
    for (int t : spec.taps) f.pod(t);
    for (double m : spec.input_mean) f.pod(m);
    for (const auto& cw : extractor.conv_weights()) {
        f.pod(cw.in_channels);
        f.pod(cw.out_channels);
        f.bytes(cw.w.data(), cw.w.size() * sizeof(double));
        f.bytes(cw.b.data(), cw.b.size() * sizeof(double));
    }
    f.pod(tau_step);
    f.pod(etf_params.kernel_radius);
    f.pod(etf_params.iterations);
    f.pod(d);
    return f.h;
}

} // namespace texflow
