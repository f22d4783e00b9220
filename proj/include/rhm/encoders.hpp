#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhm/error.hpp"
#include "rhm/network.hpp"

namespace rhm {

// Five conv1d blocks (stride 2, leaky activation) followed by one dense
// layer down to the feature dimension.
struct WheelEncoderConfig {
    int conv_layers = 5;
    int filters_per_layer = 10;
    int kernel_size = 16;
    float activation_slope = 0.1f;
    int feature_dim = 4;
    int input_length = 1024;

    void validate() const {
        if (conv_layers < 1 || filters_per_layer < 1 || kernel_size < 1)
            throw ConfigError("wheel encoder: conv dimensions must be >= 1");
        if (feature_dim < 2) throw ConfigError("wheel encoder: feature_dim must be >= 2");
        if (input_length < 2) throw ConfigError("wheel encoder: input_length must be >= 2");
        if (!(activation_slope > 0.0f && activation_slope < 1.0f))
            throw ConfigError("wheel encoder: activation slope must lie in (0, 1)");
    }
};

// Dense stack ending at the triplet layer, then one classification layer.
struct SupervisedHeadConfig {
    std::vector<int> hidden_dims = {64, 32, 16, 8};
    int triplet_layer_dim = 8;
    int output_categories = 3;

    void validate() const {
        if (hidden_dims.empty()) throw ConfigError("supervised head: hidden dims empty");
        for (std::size_t i = 1; i < hidden_dims.size(); ++i)
            if (hidden_dims[i] > hidden_dims[i - 1])
                throw ConfigError("supervised head: hidden dims must be descending");
        if (hidden_dims.back() != triplet_layer_dim)
            throw ConfigError("supervised head: triplet layer dim must equal the last hidden dim");
        if (output_categories < 2) throw ConfigError("supervised head: need >= 2 categories");
    }
};

namespace detail {

inline std::vector<LayerSpec> conv_backbone_specs(const WheelEncoderConfig& cfg, int& flat_dim) {
    std::vector<LayerSpec> specs;
    int channels = 1;
    int length = cfg.input_length;
    for (int i = 0; i < cfg.conv_layers; ++i) {
        specs.push_back(LayerSpec::conv1d(cfg.filters_per_layer, cfg.kernel_size, /*stride=*/2));
        specs.push_back(LayerSpec::leaky_relu(cfg.activation_slope));
        length = conv1d_out_len(length, cfg.kernel_size, 2);
        if (length < 1)
            throw ConfigError("wheel encoder: input length " + std::to_string(cfg.input_length) +
                              " underflows after " + std::to_string(i + 1) + " conv layers");
        channels = cfg.filters_per_layer;
    }
    flat_dim = channels * length;
    return specs;
}

}  // namespace detail

inline Network<float> build_wheel_encoder(const WheelEncoderConfig& cfg, uint64_t seed) {
    cfg.validate();
    int flat_dim = 0;
    std::vector<LayerSpec> specs = detail::conv_backbone_specs(cfg, flat_dim);
    specs.push_back(LayerSpec::dense(flat_dim, cfg.feature_dim));
    return build_network<float>({1, cfg.input_length}, specs, seed);
}

// Trunk for the supervised task: conv backbone plus the relu-activated dense
// stack, ending at the triplet layer. The triplet loss acts on its output.
inline Network<float> build_supervised_trunk(const WheelEncoderConfig& backbone,
                                             const SupervisedHeadConfig& head, uint64_t seed) {
    backbone.validate();
    head.validate();
    int flat_dim = 0;
    std::vector<LayerSpec> specs = detail::conv_backbone_specs(backbone, flat_dim);
    int in_dim = flat_dim;
    for (int dim : head.hidden_dims) {
        specs.push_back(LayerSpec::dense(in_dim, dim));
        specs.push_back(LayerSpec::relu());
        in_dim = dim;
    }
    return build_network<float>({1, backbone.input_length}, specs, seed);
}

// Classification layer above the triplet layer (trained in phase 2).
inline Network<float> build_classifier_head(const SupervisedHeadConfig& cfg, uint64_t seed) {
    cfg.validate();
    std::vector<LayerSpec> specs{LayerSpec::dense(cfg.triplet_layer_dim, cfg.output_categories),
                                 LayerSpec::softmax()};
    return build_network<float>({cfg.triplet_layer_dim}, specs, seed);
}

// Full end-to-end model for the cross-entropy comparison: identical
// architecture, loss applied on the last layer directly.
inline Network<float> build_supervised_model(const WheelEncoderConfig& backbone,
                                             const SupervisedHeadConfig& head, uint64_t seed) {
    backbone.validate();
    head.validate();
    int flat_dim = 0;
    std::vector<LayerSpec> specs = detail::conv_backbone_specs(backbone, flat_dim);
    int in_dim = flat_dim;
    for (int dim : head.hidden_dims) {
        specs.push_back(LayerSpec::dense(in_dim, dim));
        specs.push_back(LayerSpec::relu());
        in_dim = dim;
    }
    specs.push_back(LayerSpec::dense(in_dim, head.output_categories));
    specs.push_back(LayerSpec::softmax());
    return build_network<float>({1, backbone.input_length}, specs, seed);
}

// Encodes one prepared signal into a feature vector. Pure.
inline std::vector<float> encode(const Network<float>& encoder, const std::vector<float>& signal) {
    const int expected = static_cast<int>(shape_size(encoder.input_shape));
    if (static_cast<int>(signal.size()) != expected)
        throw DimensionError("encode: expected signal of length " + std::to_string(expected) +
                             ", got " + std::to_string(signal.size()));
    for (float v : signal)
        if (!std::isfinite(v)) throw NumericError("encode: non-finite input value");
    Tensor<float> in = Tensor<float>::from(encoder.input_shape, signal);
    Tensor<float> out = forward(encoder, in);
    if (!out.all_finite()) throw NumericError("encode: non-finite feature output");
    return out.data;
}

// Probability distribution over categories for one feature vector.
inline std::vector<float> classify(const Network<float>& head, const std::vector<float>& feature) {
    const int expected = static_cast<int>(shape_size(head.input_shape));
    if (static_cast<int>(feature.size()) != expected)
        throw DimensionError("classify: expected feature of dimension " + std::to_string(expected) +
                             ", got " + std::to_string(feature.size()));
    Tensor<float> in = Tensor<float>::from(head.input_shape, feature);
    return forward(head, in).data;
}

}  // namespace rhm
