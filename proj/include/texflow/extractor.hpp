#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "texflow/image.hpp"

namespace texflow {

struct ExtractorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// W x H x C activation block, HWC layout.
struct Tensor {
    int width = 0, height = 0, channels = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill) {}

    double* pixel(int x, int y) {
        return &data[(static_cast<size_t>(y) * width + x) * channels];
    }
    const double* pixel(int x, int y) const {
        return &data[(static_cast<size_t>(y) * width + x) * channels];
    }
};

struct LayerSpec {
    enum class Kind { Conv, Pool };
    Kind kind = Kind::Conv;
    int out_channels = 0; // conv only; 3x3, stride 1, pad 1, ReLU
};

// Network description: convs and 2x2 stride-2 max pools, plus the tap list
// of conv layers whose post-ReLU activations are emitted.
struct ExtractorSpec {
    std::vector<LayerSpec> layers;
    std::vector<int> taps;

    enum class WeightSource { BuiltinSeeded, External };
    WeightSource weight_source = WeightSource::BuiltinSeeded;
    uint64_t seed = 0;
    std::string weight_path;

    // subtracted per channel before the first conv
    std::array<double, 3> input_mean{0.0, 0.0, 0.0};

    // 4 convs around one pool; the small deterministic extractor used when
    // no external weights are supplied
    static ExtractorSpec builtin_default(uint64_t seed);

    // First seven conv+ReLU units of the VGG-16 layout (through conv3_3),
    // for externally supplied weights; taps all seven convs.
    static ExtractorSpec vgg16_prefix(const std::string& weight_path);

    int tap_channels(int tap_index) const;
    // spatial dims of a tap for a given input size (halved per preceding pool)
    std::pair<int, int> tap_dims(int tap_index, int in_w, int in_h) const;
    void validate() const;
};

struct FeatureMaps {
    std::vector<Tensor> taps;
    int input_width = 0, input_height = 0;
};

// Fixed-weight convolutional feature extractor with recorded activations for
// exact reverse-mode gradients. One instance must not run two overlapping
// forward passes.
class Extractor {
public:
    explicit Extractor(const ExtractorSpec& spec);

    const ExtractorSpec& spec() const { return spec_; }

    FeatureMaps forward(const ImageGrid& image);

    // Gradient of sum_t <taps_t, tap_grads_t> w.r.t. the input image.
    // Requires a recorded forward pass.
    ImageGrid backward(const std::vector<Tensor>& tap_grads) const;

    // Raw weight access for the external-file round trip.
    struct ConvWeights {
        int in_channels = 0, out_channels = 0;
        std::vector<double> w; // [oc][ky][kx][ic]
        std::vector<double> b; // [oc]
    };
    const std::vector<ConvWeights>& conv_weights() const { return convs_; }

private:
    ExtractorSpec spec_;
    std::vector<ConvWeights> convs_; // one per conv layer, in layer order
    std::vector<int> conv_of_layer_; // layer index -> conv index or -1

    // forward recording
    mutable bool recorded_ = false;
    Tensor input_;
    std::vector<Tensor> outputs_; // per layer, post ReLU / post pool
};

// External weight file: "TFW1", u32 conv count, then per conv
// u32 in_ch, u32 out_ch, f32 weights [oc][ky][kx][ic], f32 bias [oc].
void save_weights(const Extractor& e, const std::string& path);

} // namespace texflow
