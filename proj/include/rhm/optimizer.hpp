#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rhm/error.hpp"
#include "rhm/network.hpp"

namespace rhm {

enum class OptimizerKind : uint8_t { Sgd = 0, Adam = 1 };

inline std::string param_name(std::size_t layer_idx, bool is_weight) {
    return "layer" + std::to_string(layer_idx) + (is_weight ? ".weight" : ".bias");
}

// SGD or Adam (beta1=0.9, beta2=0.999, eps=1e-8, bias-corrected).
template <typename T>
struct Optimizer {
    OptimizerKind kind = OptimizerKind::Sgd;
    T learning_rate = T(0.001);
    int64_t step_count = 0;

    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    // Adam moments, parallel to the layer list (empty for activation layers).
    std::vector<Tensor<T>> m_weight, v_weight, m_bias, v_bias;

    static Optimizer make(OptimizerKind kind, T lr, const Network<T>& net) {
        Optimizer opt;
        opt.kind = kind;
        opt.learning_rate = lr;
        if (kind == OptimizerKind::Adam) {
            for (const auto& l : net.layers) {
                opt.m_weight.push_back(l.has_params() ? Tensor<T>(l.weight.shape) : Tensor<T>());
                opt.v_weight.push_back(l.has_params() ? Tensor<T>(l.weight.shape) : Tensor<T>());
                opt.m_bias.push_back(l.has_params() ? Tensor<T>(l.bias.shape) : Tensor<T>());
                opt.v_bias.push_back(l.has_params() ? Tensor<T>(l.bias.shape) : Tensor<T>());
            }
        }
        return opt;
    }

    void step(Network<T>& net, const GradientSet<T>& grads) {
        ++step_count;
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_count));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_count));
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            Layer<T>& l = net.layers[i];
            if (!l.has_params()) continue;
            apply(l.weight, grads.weight[i], i, true, bc1, bc2);
            apply(l.bias, grads.bias[i], i, false, bc1, bc2);
        }
    }

private:
    void apply(Tensor<T>& param, const Tensor<T>& grad, std::size_t layer_idx, bool is_weight,
               double bc1, double bc2) {
        if (grad.size() != param.size())
            throw DimensionError("gradient shape mismatch for " + param_name(layer_idx, is_weight));
        for (int64_t j = 0; j < grad.size(); ++j) {
            if (!std::isfinite(static_cast<double>(grad.data[j])))
                throw NumericError("non-finite gradient in " + param_name(layer_idx, is_weight));
        }
        if (kind == OptimizerKind::Sgd) {
            for (int64_t j = 0; j < param.size(); ++j)
                param.data[j] -= learning_rate * grad.data[j];
            return;
        }
        Tensor<T>& m = is_weight ? m_weight[layer_idx] : m_bias[layer_idx];
        Tensor<T>& v = is_weight ? v_weight[layer_idx] : v_bias[layer_idx];
        for (int64_t j = 0; j < param.size(); ++j) {
            const double g = static_cast<double>(grad.data[j]);
            const double mj = kBeta1 * m.data[j] + (1.0 - kBeta1) * g;
            const double vj = kBeta2 * v.data[j] + (1.0 - kBeta2) * g * g;
            m.data[j] = static_cast<T>(mj);
            v.data[j] = static_cast<T>(vj);
            const double update = learning_rate * (mj / bc1) / (std::sqrt(vj / bc2) + kEps);
            param.data[j] -= static_cast<T>(update);
        }
    }
};

}  // namespace rhm
