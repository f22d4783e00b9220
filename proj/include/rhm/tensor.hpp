#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "rhm/error.hpp"

namespace rhm {

inline int64_t shape_size(const std::vector<int>& shape) {
    int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
}

inline std::string shape_str(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

// Dense row-major buffer with an optional gradient of the same shape.
template <typename T>
struct Tensor {
    std::vector<int> shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty unless gradients are tracked

    Tensor() = default;

    explicit Tensor(std::vector<int> s, T fill = T(0)) : shape(std::move(s)) {
        validate_shape();
        data.assign(static_cast<std::size_t>(shape_size(shape)), fill);
    }

    static Tensor from(std::vector<int> s, std::vector<T> values) {
        Tensor t;
        t.shape = std::move(s);
        t.validate_shape();
        if (static_cast<int64_t>(values.size()) != shape_size(t.shape)) {
            throw DimensionError("tensor data length " + std::to_string(values.size()) +
                                 " does not match shape " + shape_str(t.shape));
        }
        t.data = std::move(values);
        return t;
    }

    int64_t size() const { return static_cast<int64_t>(data.size()); }

    bool has_grad() const { return !grad.empty(); }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }

    void zero_grad() {
        if (!grad.empty()) std::fill(grad.begin(), grad.end(), T(0));
    }

    bool all_finite() const {
        for (T v : data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.reserve(data.size());
        for (T v : data) out.data.push_back(static_cast<U>(v));
        return out;
    }

private:
    void validate_shape() const {
        if (shape.empty()) throw DimensionError("tensor shape must not be empty");
        for (int d : shape) {
            if (d < 1) throw DimensionError("tensor shape " + shape_str(shape) +
                                            " has a non-positive dimension");
        }
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace rhm
