#include "texflow/extractor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "texflow/parallel.hpp"
#include "texflow/rng.hpp"

namespace texflow {

ExtractorSpec ExtractorSpec::builtin_default(uint64_t seed) {
    ExtractorSpec s;
    s.layers = {
        {LayerSpec::Kind::Conv, 8},
        {LayerSpec::Kind::Conv, 8},
        {LayerSpec::Kind::Pool, 0},
        {LayerSpec::Kind::Conv, 16},
        {LayerSpec::Kind::Conv, 16},
    };
    s.taps = {0, 1, 3, 4};
    s.weight_source = WeightSource::BuiltinSeeded;
    s.seed = seed;
    return s;
}

ExtractorSpec ExtractorSpec::vgg16_prefix(const std::string& weight_path) {
    ExtractorSpec s;
    s.layers = {
        {LayerSpec::Kind::Conv, 64},  {LayerSpec::Kind::Conv, 64},
        {LayerSpec::Kind::Pool, 0},
        {LayerSpec::Kind::Conv, 128}, {LayerSpec::Kind::Conv, 128},
        {LayerSpec::Kind::Pool, 0},
        {LayerSpec::Kind::Conv, 256}, {LayerSpec::Kind::Conv, 256},
        {LayerSpec::Kind::Conv, 256},
    };
    s.taps = {0, 1, 3, 4, 6, 7, 8};
    s.weight_source = WeightSource::External;
    s.weight_path = weight_path;
    s.input_mean = {0.485, 0.456, 0.406};
    return s;
}

void ExtractorSpec::validate() const {
    if (layers.empty()) throw ExtractorError("extractor has no layers");
    if (taps.empty()) throw ExtractorError("extractor must emit at least one tap");
    for (int t : taps) {
        if (t < 0 || t >= static_cast<int>(layers.size()))
            throw ExtractorError("tap index out of range");
        if (layers[t].kind != LayerSpec::Kind::Conv)
            throw ExtractorError("taps must reference conv layers");
    }
    for (const LayerSpec& l : layers)
        if (l.kind == LayerSpec::Kind::Conv && l.out_channels < 1)
            throw ExtractorError("conv layer with non-positive channel count");
}

int ExtractorSpec::tap_channels(int tap_index) const {
    return layers[taps[tap_index]].out_channels;
}

std::pair<int, int> ExtractorSpec::tap_dims(int tap_index, int in_w, int in_h) const {
    int w = in_w, h = in_h;
    for (int l = 0; l <= taps[tap_index]; ++l)
        if (layers[l].kind == LayerSpec::Kind::Pool) {
            w /= 2;
            h /= 2;
        }
    return {w, h};
}

namespace {

Extractor::ConvWeights builtin_conv(int in_ch, int out_ch, Rng& rng) {
    Extractor::ConvWeights cw;
    cw.in_channels = in_ch;
    cw.out_channels = out_ch;
    cw.w.resize(static_cast<size_t>(out_ch) * 9 * in_ch);
    cw.b.assign(out_ch, 0.0);
    double fan_in = in_ch * 9.0, fan_out = out_ch * 9.0;
    double a = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : cw.w) v = rng.uniform(-a, a);
    return cw;
}

std::vector<Extractor::ConvWeights> load_weight_file(const ExtractorSpec& spec) {
    std::ifstream f(spec.weight_path, std::ios::binary);
    if (!f) throw ExtractorError("cannot open weight file: " + spec.weight_path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "TFW1", 4) != 0)
        throw ExtractorError("bad weight file magic: " + spec.weight_path);

    auto read_u32 = [&]() {
        unsigned char b[4];
        f.read(reinterpret_cast<char*>(b), 4);
        if (!f) throw ExtractorError("truncated weight file");
        return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
               (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
    };
    auto read_f32 = [&](std::vector<double>& out, size_t n) {
        std::vector<float> buf(n);
        f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 4));
        if (!f) throw ExtractorError("truncated weight file");
        out.assign(buf.begin(), buf.end());
    };

    std::vector<int> conv_layers;
    for (size_t l = 0; l < spec.layers.size(); ++l)
        if (spec.layers[l].kind == LayerSpec::Kind::Conv)
            conv_layers.push_back(static_cast<int>(l));

    uint32_t count = read_u32();
    if (count != conv_layers.size())
        throw ExtractorError("weight file has " + std::to_string(count) +
                             " conv layers, extractor expects " +
                             std::to_string(conv_layers.size()));

    std::vector<Extractor::ConvWeights> convs;
    int in_ch = 3;
    for (uint32_t c = 0; c < count; ++c) {
        uint32_t fin = read_u32(), fout = read_u32();
        int expect_out = spec.layers[conv_layers[c]].out_channels;
        if (static_cast<int>(fin) != in_ch || static_cast<int>(fout) != expect_out)
            throw ExtractorError("weight file shape mismatch at conv layer " +
                                 std::to_string(c) + ": file " + std::to_string(fin) +
                                 "x" + std::to_string(fout) + ", expected " +
                                 std::to_string(in_ch) + "x" + std::to_string(expect_out));
        Extractor::ConvWeights cw;
        cw.in_channels = in_ch;
        cw.out_channels = expect_out;
        read_f32(cw.w, static_cast<size_t>(expect_out) * 9 * in_ch);
        read_f32(cw.b, expect_out);
        convs.push_back(std::move(cw));
        in_ch = expect_out;
    }
    return convs;
}

} // namespace

Extractor::Extractor(const ExtractorSpec& spec) : spec_(spec) {
    spec_.validate();
    conv_of_layer_.assign(spec_.layers.size(), -1);

    if (spec_.weight_source == ExtractorSpec::WeightSource::External) {
        convs_ = load_weight_file(spec_);
        int ci = 0;
        for (size_t l = 0; l < spec_.layers.size(); ++l)
            if (spec_.layers[l].kind == LayerSpec::Kind::Conv)
                conv_of_layer_[l] = ci++;
        return;
    }

    Rng rng(derive_seed(spec_.seed, 0x5eed));
    int in_ch = 3;
    for (size_t l = 0; l < spec_.layers.size(); ++l) {
        if (spec_.layers[l].kind != LayerSpec::Kind::Conv) continue;
        conv_of_layer_[l] = static_cast<int>(convs_.size());
        convs_.push_back(builtin_conv(in_ch, spec_.layers[l].out_channels, rng));
        in_ch = spec_.layers[l].out_channels;
    }
}

namespace {

void conv3x3_relu(const Tensor& in, const Extractor::ConvWeights& cw, Tensor& out) {
    int w = in.width, h = in.height;
    int ic = cw.in_channels, oc = cw.out_channels;
    out = Tensor(w, h, oc);
    parallel_for(0, h, [&](int y) {
        for (int x = 0; x < w; ++x) {
            double* op = out.pixel(x, y);
            for (int o = 0; o < oc; ++o) {
                double acc = cw.b[o];
                const double* wbase = &cw.w[static_cast<size_t>(o) * 9 * ic];
                for (int ky = 0; ky < 3; ++ky) {
                    int yy = y + ky - 1;
                    if (yy < 0 || yy >= h) continue; // zero padding
                    for (int kx = 0; kx < 3; ++kx) {
                        int xx = x + kx - 1;
                        if (xx < 0 || xx >= w) continue;
                        const double* ip = in.pixel(xx, yy);
                        const double* wp = wbase + (ky * 3 + kx) * ic;
                        for (int c = 0; c < ic; ++c) acc += wp[c] * ip[c];
                    }
                }
                op[o] = acc > 0 ? acc : 0.0; // ReLU
            }
        }
    });
}

void maxpool2(const Tensor& in, Tensor& out) {
    int ow = in.width / 2, oh = in.height / 2, c = in.channels;
    out = Tensor(ow, oh, c);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            double* op = out.pixel(x, y);
            const double* p00 = in.pixel(2 * x, 2 * y);
            const double* p10 = in.pixel(2 * x + 1, 2 * y);
            const double* p01 = in.pixel(2 * x, 2 * y + 1);
            const double* p11 = in.pixel(2 * x + 1, 2 * y + 1);
            for (int ch = 0; ch < c; ++ch)
                op[ch] = std::max(std::max(p00[ch], p10[ch]), std::max(p01[ch], p11[ch]));
        }
    }
}

void conv3x3_backward_input(const Tensor& grad_out, const Extractor::ConvWeights& cw,
                            Tensor& grad_in) {
    int w = grad_out.width, h = grad_out.height;
    int ic = cw.in_channels, oc = cw.out_channels;
    grad_in = Tensor(w, h, ic);
    parallel_for(0, h, [&](int y) {
        std::vector<double> acc(ic);
        for (int x = 0; x < w; ++x) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (int ky = 0; ky < 3; ++ky) {
                int yy = y - ky + 1;
                if (yy < 0 || yy >= h) continue;
                for (int kx = 0; kx < 3; ++kx) {
                    int xx = x - kx + 1;
                    if (xx < 0 || xx >= w) continue;
                    const double* gp = grad_out.pixel(xx, yy);
                    for (int o = 0; o < oc; ++o) {
                        double g = gp[o];
                        if (g == 0.0) continue;
                        const double* wp = &cw.w[(static_cast<size_t>(o) * 9 + ky * 3 + kx) * ic];
                        for (int c = 0; c < ic; ++c) acc[c] += g * wp[c];
                    }
                }
            }
            double* dst = grad_in.pixel(x, y);
            std::copy(acc.begin(), acc.end(), dst);
        }
    });
}

// gradient routes to the argmax texel; earlier window positions win ties
void maxpool2_backward(const Tensor& grad_out, const Tensor& in, Tensor& grad_in) {
    int ow = grad_out.width, oh = grad_out.height, c = grad_out.channels;
    grad_in = Tensor(in.width, in.height, c);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const double* gp = grad_out.pixel(x, y);
            for (int ch = 0; ch < c; ++ch) {
                double best = -1e300;
                int bx = 2 * x, by = 2 * y;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        double v = in.pixel(2 * x + dx, 2 * y + dy)[ch];
                        if (v > best) {
                            best = v;
                            bx = 2 * x + dx;
                            by = 2 * y + dy;
                        }
                    }
                grad_in.pixel(bx, by)[ch] += gp[ch];
            }
        }
    }
}

} // namespace

FeatureMaps Extractor::forward(const ImageGrid& image) {
    if (image.channels() != 3)
        throw ExtractorError("extractor input must be 3-channel");
    int w = image.width(), h = image.height();

    input_ = Tensor(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double* p = image.pixel(x, y);
            double* q = input_.pixel(x, y);
            for (int c = 0; c < 3; ++c) q[c] = p[c] - spec_.input_mean[c];
        }

    outputs_.assign(spec_.layers.size(), Tensor());
    const Tensor* cur = &input_;
    for (size_t l = 0; l < spec_.layers.size(); ++l) {
        if (spec_.layers[l].kind == LayerSpec::Kind::Conv) {
            conv3x3_relu(*cur, convs_[conv_of_layer_[l]], outputs_[l]);
        } else {
            if (cur->width < 2 || cur->height < 2)
                throw ExtractorError("input too small for pooling layer");
            maxpool2(*cur, outputs_[l]);
        }
        cur = &outputs_[l];
    }
    recorded_ = true;

    FeatureMaps maps;
    maps.input_width = w;
    maps.input_height = h;
    for (int t : spec_.taps) maps.taps.push_back(outputs_[t]);
    return maps;
}

ImageGrid Extractor::backward(const std::vector<Tensor>& tap_grads) const {
    if (!recorded_) throw ExtractorError("backward called without a recorded forward pass");
    if (tap_grads.size() != spec_.taps.size())
        throw ExtractorError("tap gradient count mismatch");

    size_t nl = spec_.layers.size();
    std::vector<Tensor> grads(nl);
    auto ensure = [&](size_t l, const Tensor& like) {
        if (grads[l].data.empty()) grads[l] = Tensor(like.width, like.height, like.channels);
    };
    for (size_t t = 0; t < spec_.taps.size(); ++t) {
        int l = spec_.taps[t];
        const Tensor& g = tap_grads[t];
        if (g.width != outputs_[l].width || g.height != outputs_[l].height ||
            g.channels != outputs_[l].channels)
            throw ExtractorError("tap gradient shape mismatch");
        ensure(l, outputs_[l]);
        for (size_t i = 0; i < g.data.size(); ++i) grads[l].data[i] += g.data[i];
    }

    Tensor grad_below; // gradient flowing to the layer below
    for (int l = static_cast<int>(nl) - 1; l >= 0; --l) {
        const Tensor& below = l > 0 ? outputs_[l - 1] : input_;
        Tensor total;
        if (!grad_below.data.empty()) {
            total = std::move(grad_below);
            if (!grads[l].data.empty())
                for (size_t i = 0; i < total.data.size(); ++i) total.data[i] += grads[l].data[i];
        } else if (!grads[l].data.empty()) {
            total = std::move(grads[l]);
        } else {
            total = Tensor(outputs_[l].width, outputs_[l].height, outputs_[l].channels);
        }

        if (spec_.layers[l].kind == LayerSpec::Kind::Conv) {
            // ReLU: mask by positive recorded outputs
            const Tensor& out = outputs_[l];
            for (size_t i = 0; i < total.data.size(); ++i)
                if (out.data[i] <= 0.0) total.data[i] = 0.0;
            conv3x3_backward_input(total, convs_[conv_of_layer_[l]], grad_below);
            // conv3x3_backward_input produces dims of grad_out; same as input dims
            (void)below;
        } else {
            maxpool2_backward(total, below, grad_below);
        }
    }

    ImageGrid out(input_.width, input_.height, 3);
    for (int y = 0; y < input_.height; ++y)
        for (int x = 0; x < input_.width; ++x) {
            const double* g = grad_below.pixel(x, y);
            double* p = out.pixel(x, y);
            for (int c = 0; c < 3; ++c) p[c] = g[c];
        }
    return out;
}

void save_weights(const Extractor& e, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ExtractorError("cannot write weight file: " + path);
    f.write("TFW1", 4);
    auto write_u32 = [&](uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
        f.write(reinterpret_cast<char*>(b), 4);
    };
    const auto& convs = e.conv_weights();
    write_u32(static_cast<uint32_t>(convs.size()));
    for (const auto& cw : convs) {
        write_u32(static_cast<uint32_t>(cw.in_channels));
        write_u32(static_cast<uint32_t>(cw.out_channels));
        std::vector<float> buf(cw.w.begin(), cw.w.end());
        f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
        buf.assign(cw.b.begin(), cw.b.end());
        f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
    }
}

} // namespace texflow
