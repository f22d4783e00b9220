#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rhm/error.hpp"
#include "rhm/tensor.hpp"

namespace rhm {

enum class LayerKind : uint8_t { Conv1d = 0, Dense = 1, LeakyRelu = 2, Relu = 3, Softmax = 4 };

inline const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv1d: return "conv1d";
        case LayerKind::Dense: return "dense";
        case LayerKind::LeakyRelu: return "leaky-relu";
        case LayerKind::Relu: return "relu";
        case LayerKind::Softmax: return "softmax";
    }
    return "?";
}

struct LayerSpec {
    LayerKind kind = LayerKind::Dense;
    int filters = 0;      // conv1d
    int kernel_size = 0;  // conv1d
    int stride = 1;       // conv1d
    int in_dim = 0;       // dense
    int out_dim = 0;      // dense
    float slope = 0.0f;   // leaky-relu

    static LayerSpec conv1d(int filters, int kernel_size, int stride = 1) {
        LayerSpec s;
        s.kind = LayerKind::Conv1d;
        s.filters = filters;
        s.kernel_size = kernel_size;
        s.stride = stride;
        return s;
    }
    static LayerSpec dense(int in_dim, int out_dim) {
        LayerSpec s;
        s.kind = LayerKind::Dense;
        s.in_dim = in_dim;
        s.out_dim = out_dim;
        return s;
    }
    static LayerSpec leaky_relu(float slope) {
        LayerSpec s;
        s.kind = LayerKind::LeakyRelu;
        s.slope = slope;
        return s;
    }
    static LayerSpec relu() {
        LayerSpec s;
        s.kind = LayerKind::Relu;
        return s;
    }
    static LayerSpec softmax() {
        LayerSpec s;
        s.kind = LayerKind::Softmax;
        return s;
    }

    void validate() const {
        switch (kind) {
            case LayerKind::Conv1d:
                if (filters < 1 || kernel_size < 1 || stride < 1)
                    throw ConfigError("conv1d dimensions must be >= 1");
                break;
            case LayerKind::Dense:
                if (in_dim < 1 || out_dim < 1) throw ConfigError("dense dimensions must be >= 1");
                break;
            case LayerKind::LeakyRelu:
                if (!(slope > 0.0f && slope < 1.0f))
                    throw ConfigError("leaky-relu slope must lie in (0, 1)");
                break;
            default:
                break;
        }
    }
};

// Symmetric "same"-style zero padding.
inline int conv1d_padding(int kernel_size) { return kernel_size / 2; }

inline int conv1d_out_len(int in_len, int kernel_size, int stride) {
    const int pad = conv1d_padding(kernel_size);
    return (in_len + 2 * pad - kernel_size) / stride + 1;
}

namespace detail {

// x: {Cin, L}  w: {F, Cin, K}  b: {F}  y: {F, Lout}
template <typename T>
void conv1d_forward(const LayerSpec& s, const Tensor<T>& x, const Tensor<T>& w,
                    const Tensor<T>& b, Tensor<T>& y) {
    const int cin = x.shape[0];
    const int len = x.shape[1];
    const int k = s.kernel_size;
    const int pad = conv1d_padding(k);
    const int out_len = conv1d_out_len(len, k, s.stride);
    for (int f = 0; f < s.filters; ++f) {
        const T* wf = w.data.data() + static_cast<std::size_t>(f) * cin * k;
        T* yf = y.data.data() + static_cast<std::size_t>(f) * out_len;
        for (int t = 0; t < out_len; ++t) {
            const int start = t * s.stride - pad;
            T acc = b.data[f];
            const int k0 = start < 0 ? -start : 0;
            const int k1 = start + k > len ? len - start : k;
            for (int c = 0; c < cin; ++c) {
                const T* xc = x.data.data() + static_cast<std::size_t>(c) * len;
                const T* wc = wf + static_cast<std::size_t>(c) * k;
                for (int kk = k0; kk < k1; ++kk) acc += wc[kk] * xc[start + kk];
            }
            yf[t] = acc;
        }
    }
}

template <typename T>
void conv1d_backward(const LayerSpec& s, const Tensor<T>& x, const Tensor<T>& w,
                     const Tensor<T>& dy, Tensor<T>& dw, Tensor<T>& db, Tensor<T>& dx) {
    const int cin = x.shape[0];
    const int len = x.shape[1];
    const int k = s.kernel_size;
    const int pad = conv1d_padding(k);
    const int out_len = conv1d_out_len(len, k, s.stride);
    for (int f = 0; f < s.filters; ++f) {
        const T* dyf = dy.data.data() + static_cast<std::size_t>(f) * out_len;
        const T* wf = w.data.data() + static_cast<std::size_t>(f) * cin * k;
        T* dwf = dw.data.data() + static_cast<std::size_t>(f) * cin * k;
        T acc_b = T(0);
        for (int t = 0; t < out_len; ++t) acc_b += dyf[t];
        db.data[f] += acc_b;
        for (int t = 0; t < out_len; ++t) {
            const T g = dyf[t];
            if (g == T(0)) continue;
            const int start = t * s.stride - pad;
            const int k0 = start < 0 ? -start : 0;
            const int k1 = start + k > len ? len - start : k;
            for (int c = 0; c < cin; ++c) {
                const T* xc = x.data.data() + static_cast<std::size_t>(c) * len;
                T* dxc = dx.data.data() + static_cast<std::size_t>(c) * len;
                const T* wc = wf + static_cast<std::size_t>(c) * k;
                T* dwc = dwf + static_cast<std::size_t>(c) * k;
                for (int kk = k0; kk < k1; ++kk) {
                    dwc[kk] += g * xc[start + kk];
                    dxc[start + kk] += g * wc[kk];
                }
            }
        }
    }
}

// y = Wx + b with W {out, in}
template <typename T>
void dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, Tensor<T>& y) {
    const int in = static_cast<int>(x.size());
    const int out = b.shape[0];
    for (int o = 0; o < out; ++o) {
        const T* row = w.data.data() + static_cast<std::size_t>(o) * in;
        T acc = b.data[o];
        for (int i = 0; i < in; ++i) acc += row[i] * x.data[i];
        y.data[o] = acc;
    }
}

template <typename T>
void dense_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, Tensor<T>& dw,
                    Tensor<T>& db, Tensor<T>& dx) {
    const int in = static_cast<int>(x.size());
    const int out = static_cast<int>(dy.size());
    for (int o = 0; o < out; ++o) {
        const T g = dy.data[o];
        db.data[o] += g;
        const T* row = w.data.data() + static_cast<std::size_t>(o) * in;
        T* dwrow = dw.data.data() + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) {
            dwrow[i] += g * x.data[i];
            dx.data[i] += g * row[i];
        }
    }
}

template <typename T>
void softmax_forward(const Tensor<T>& x, Tensor<T>& y) {
    T mx = x.data[0];
    for (T v : x.data) mx = v > mx ? v : mx;
    T sum = T(0);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        y.data[i] = std::exp(x.data[i] - mx);
        sum += y.data[i];
    }
    for (auto& v : y.data) v /= sum;
}

template <typename T>
void softmax_backward(const Tensor<T>& y, const Tensor<T>& dy, Tensor<T>& dx) {
    T dot = T(0);
    for (std::size_t i = 0; i < y.data.size(); ++i) dot += dy.data[i] * y.data[i];
    for (std::size_t i = 0; i < y.data.size(); ++i) dx.data[i] += y.data[i] * (dy.data[i] - dot);
}

}  // namespace detail

}  // namespace rhm
