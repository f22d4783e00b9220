#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rhm/error.hpp"
#include "rhm/layers.hpp"
#include "rhm/rng.hpp"
#include "rhm/tensor.hpp"

namespace rhm {

template <typename T>
struct Layer {
    LayerSpec spec;
    Tensor<T> weight;  // conv1d: {F, Cin, K}; dense: {out, in}
    Tensor<T> bias;    // conv1d: {F}; dense: {out}

    bool has_params() const {
        return spec.kind == LayerKind::Conv1d || spec.kind == LayerKind::Dense;
    }
};

// A plain layer stack. Parameters are frozen during forward/backward; all
// per-call scratch lives in the caller-owned Trace, so concurrent evaluation
// on shared parameters is safe.
template <typename T>
struct Network {
    std::vector<int> input_shape;  // {channels, length} or {n}
    std::vector<Layer<T>> layers;

    int64_t parameter_count() const {
        int64_t n = 0;
        for (const auto& l : layers) n += l.weight.size() + l.bias.size();
        return n;
    }

    std::vector<int> output_shape() const {
        std::vector<int> s = input_shape;
        for (std::size_t i = 0; i < layers.size(); ++i) s = layer_output_shape(i, s);
        return s;
    }

    std::vector<int> layer_output_shape(std::size_t idx, const std::vector<int>& in) const {
        const LayerSpec& s = layers[idx].spec;
        switch (s.kind) {
            case LayerKind::Conv1d: {
                if (in.size() != 2)
                    throw DimensionError(layer_label(idx) + ": expected {channels, length} input, got " +
                                         shape_str(in));
                const int out_len = conv1d_out_len(in[1], s.kernel_size, s.stride);
                if (out_len < 1)
                    throw DimensionError(layer_label(idx) + ": input length " + std::to_string(in[1]) +
                                         " underflows kernel " + std::to_string(s.kernel_size));
                return {s.filters, out_len};
            }
            case LayerKind::Dense: {
                if (shape_size(in) != s.in_dim)
                    throw DimensionError(layer_label(idx) + ": expected input of size " +
                                         std::to_string(s.in_dim) + ", got " + shape_str(in));
                return {s.out_dim};
            }
            default:
                return in;
        }
    }

    std::string layer_label(std::size_t idx) const {
        return "layer " + std::to_string(idx) + " (" + layer_kind_name(layers[idx].spec.kind) + ")";
    }

    template <typename U>
    Network<U> cast() const {
        Network<U> out;
        out.input_shape = input_shape;
        out.layers.reserve(layers.size());
        for (const auto& l : layers) {
            Layer<U> lu;
            lu.spec = l.spec;
            lu.weight = l.weight.template cast<U>();
            lu.bias = l.bias.template cast<U>();
            out.layers.push_back(std::move(lu));
        }
        return out;
    }
};

using NetworkF = Network<float>;

// Recorded activations from one forward pass: act[0] is the input, act[i+1]
// the output of layer i. Owned by the caller.
template <typename T>
struct Trace {
    std::vector<Tensor<T>> act;
};

template <typename T>
struct GradientSet {
    std::vector<Tensor<T>> weight;  // parallel to network layers; empty tensors for activations
    std::vector<Tensor<T>> bias;
    Tensor<T> input;

    void add(const GradientSet& other) {
        for (std::size_t i = 0; i < weight.size(); ++i) {
            for (int64_t j = 0; j < weight[i].size(); ++j) weight[i].data[j] += other.weight[i].data[j];
            for (int64_t j = 0; j < bias[i].size(); ++j) bias[i].data[j] += other.bias[i].data[j];
        }
        for (int64_t j = 0; j < input.size(); ++j) input.data[j] += other.input.data[j];
    }

    void scale(T factor) {
        for (auto& w : weight)
            for (auto& v : w.data) v *= factor;
        for (auto& b : bias)
            for (auto& v : b.data) v *= factor;
        for (auto& v : input.data) v *= factor;
    }
};

// Glorot-uniform weights, zero biases.
template <typename T = float>
Network<T> build_network(std::vector<int> input_shape, const std::vector<LayerSpec>& specs,
                         uint64_t seed) {
    Network<T> net;
    net.input_shape = std::move(input_shape);
    Rng rng(seed);
    std::vector<int> shape = net.input_shape;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const LayerSpec& s = specs[i];
        s.validate();
        Layer<T> layer;
        layer.spec = s;
        if (s.kind == LayerKind::Conv1d) {
            if (shape.size() != 2)
                throw DimensionError("layer " + std::to_string(i) +
                                     " (conv1d): needs {channels, length} input, got " + shape_str(shape));
            const int cin = shape[0];
            layer.weight = Tensor<T>({s.filters, cin, s.kernel_size});
            layer.bias = Tensor<T>({s.filters});
            const double fan_in = static_cast<double>(cin) * s.kernel_size;
            const double fan_out = static_cast<double>(s.filters) * s.kernel_size;
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            for (auto& v : layer.weight.data) v = static_cast<T>(rng.uniform(-limit, limit));
        } else if (s.kind == LayerKind::Dense) {
            layer.weight = Tensor<T>({s.out_dim, s.in_dim});
            layer.bias = Tensor<T>({s.out_dim});
            const double limit = std::sqrt(6.0 / (s.in_dim + s.out_dim));
            for (auto& v : layer.weight.data) v = static_cast<T>(rng.uniform(-limit, limit));
        }
        net.layers.push_back(std::move(layer));
        shape = net.layer_output_shape(i, shape);
    }
    return net;
}

template <typename T>
Tensor<T> forward(const Network<T>& net, const Tensor<T>& input, Trace<T>* trace = nullptr) {
    if (shape_size(input.shape) != shape_size(net.input_shape)) {
        throw DimensionError("network input: expected " + shape_str(net.input_shape) + ", got " +
                             shape_str(input.shape));
    }
    Tensor<T> cur = input;
    cur.shape = net.input_shape;
    if (trace) {
        trace->act.clear();
        trace->act.reserve(net.layers.size() + 1);
        trace->act.push_back(cur);
    }
    std::vector<int> shape = net.input_shape;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer<T>& l = net.layers[i];
        const std::vector<int> out_shape = net.layer_output_shape(i, shape);
        Tensor<T> out(out_shape);
        switch (l.spec.kind) {
            case LayerKind::Conv1d:
                detail::conv1d_forward(l.spec, cur, l.weight, l.bias, out);
                break;
            case LayerKind::Dense:
                detail::dense_forward(cur, l.weight, l.bias, out);
                break;
            case LayerKind::LeakyRelu: {
                const T slope = static_cast<T>(l.spec.slope);
                for (int64_t j = 0; j < cur.size(); ++j) {
                    const T x = cur.data[j];
                    out.data[j] = x > T(0) ? x : slope * x;
                }
                break;
            }
            case LayerKind::Relu:
                for (int64_t j = 0; j < cur.size(); ++j) {
                    const T x = cur.data[j];
                    out.data[j] = x > T(0) ? x : T(0);
                }
                break;
            case LayerKind::Softmax:
                detail::softmax_forward(cur, out);
                break;
        }
        cur = std::move(out);
        shape = out_shape;
        if (trace) trace->act.push_back(cur);
    }
    return cur;
}

template <typename T>
GradientSet<T> zero_gradients(const Network<T>& net) {
    GradientSet<T> g;
    g.weight.reserve(net.layers.size());
    g.bias.reserve(net.layers.size());
    for (const auto& l : net.layers) {
        g.weight.push_back(l.has_params() ? Tensor<T>(l.weight.shape) : Tensor<T>());
        g.bias.push_back(l.has_params() ? Tensor<T>(l.bias.shape) : Tensor<T>());
    }
    g.input = Tensor<T>(net.input_shape);
    return g;
}

// Reverse pass over a recorded trace. Pure: gradients are returned, the
// network itself is untouched. When output_index is given, upstream is taken
// as the gradient of trace.act[output_index] and only layers below it are
// walked (used for the fused softmax/cross-entropy path).
template <typename T>
GradientSet<T> backward(const Network<T>& net, const Trace<T>& trace, const Tensor<T>& upstream,
                        std::size_t output_index = SIZE_MAX) {
    if (trace.act.size() != net.layers.size() + 1)
        throw StateError("backward requires a trace recorded by forward on this network");
    if (output_index == SIZE_MAX) output_index = trace.act.size() - 1;
    if (output_index >= trace.act.size())
        throw StateError("backward: output index beyond recorded trace");
    if (upstream.size() != trace.act[output_index].size())
        throw DimensionError("upstream gradient: expected " +
                             shape_str(trace.act[output_index].shape) + ", got " +
                             shape_str(upstream.shape));
    GradientSet<T> grads = zero_gradients(net);
    Tensor<T> dy = upstream;
    dy.shape = trace.act[output_index].shape;
    for (std::size_t ri = output_index; ri-- > 0;) {
        const Layer<T>& l = net.layers[ri];
        const Tensor<T>& x = trace.act[ri];
        Tensor<T> dx(x.shape);
        switch (l.spec.kind) {
            case LayerKind::Conv1d:
                detail::conv1d_backward(l.spec, x, l.weight, dy, grads.weight[ri], grads.bias[ri], dx);
                break;
            case LayerKind::Dense:
                detail::dense_backward(x, l.weight, dy, grads.weight[ri], grads.bias[ri], dx);
                break;
            case LayerKind::LeakyRelu: {
                const T slope = static_cast<T>(l.spec.slope);
                for (int64_t j = 0; j < x.size(); ++j)
                    dx.data[j] = dy.data[j] * (x.data[j] > T(0) ? T(1) : slope);
                break;
            }
            case LayerKind::Relu:
                for (int64_t j = 0; j < x.size(); ++j)
                    dx.data[j] = x.data[j] > T(0) ? dy.data[j] : T(0);
                break;
            case LayerKind::Softmax:
                detail::softmax_backward(trace.act[ri + 1], dy, dx);
                break;
        }
        dy = std::move(dx);
    }
    grads.input = std::move(dy);
    return grads;
}

}  // namespace rhm
