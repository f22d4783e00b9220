#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "rhm/network.hpp"
#include "rhm/optimizer.hpp"
#include "rhm/parallel.hpp"
#include "rhm/rng.hpp"

namespace rhm {

struct GradCheckEntry {
    std::string param;
    double max_rel_error = 0.0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    double max_rel_error = 0.0;
    bool pass = true;
};

namespace detail {

// Scalar objective J = sum_i probe_i * out_i. The probe keeps the objective
// sensitive through softmax, whose outputs sum to a constant. The returned
// pattern hashes the activation signs at relu/leaky layers; a pattern change
// between two evaluations means the finite-difference step crossed a kink.
template <typename T>
T probe_objective(const Network<T>& net, const Tensor<T>& input, const std::vector<T>& probe,
                  uint64_t* pattern = nullptr) {
    Trace<T> trace;
    const Tensor<T> out = forward(net, input, &trace);
    if (pattern) {
        uint64_t h = 1469598103934665603ULL;
        for (std::size_t li = 0; li < net.layers.size(); ++li) {
            const LayerKind kind = net.layers[li].spec.kind;
            if (kind != LayerKind::Relu && kind != LayerKind::LeakyRelu) continue;
            for (T v : trace.act[li].data) {
                h ^= (v > T(0)) ? 0x9e37u : 0x79b9u;
                h *= 1099511628211ULL;
            }
        }
        *pattern = h;
    }
    T acc = T(0);
    for (int64_t i = 0; i < out.size(); ++i) acc += probe[static_cast<std::size_t>(i)] * out.data[i];
    return acc;
}

inline double rel_error(double a, double b) {
    const double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / denom;
}

}  // namespace detail

// Central-difference comparison of supplied analytic gradients. Runs in
// double precision regardless of the network's training precision.
inline GradCheckReport compare_with_fd(const Network<double>& net, const Tensor<double>& input,
                                       const std::vector<double>& probe,
                                       const GradientSet<double>& analytic, double h,
                                       double tolerance) {
    GradCheckReport report;
    struct Slot {
        std::size_t layer;
        bool is_weight;
        int64_t index;
        double analytic;
    };
    std::vector<Slot> slots;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.layers[i].has_params()) continue;
        for (int64_t j = 0; j < net.layers[i].weight.size(); ++j)
            slots.push_back({i, true, j, analytic.weight[i].data[j]});
        for (int64_t j = 0; j < net.layers[i].bias.size(); ++j)
            slots.push_back({i, false, j, analytic.bias[i].data[j]});
    }
    uint64_t base_pattern = 0;
    detail::probe_objective(net, input, probe, &base_pattern);

    std::vector<double> errors(slots.size());
    parallel_for(slots.size(), [&](std::size_t s) {
        const Slot& slot = slots[s];
        Network<double> probe_net = net;
        Tensor<double>& param = slot.is_weight ? probe_net.layers[slot.layer].weight
                                               : probe_net.layers[slot.layer].bias;
        const double original = param.data[slot.index];
        // a step that flips any relu/leaky activation sign straddles a kink,
        // where the central difference is meaningless; shrink until it stays
        // on the same smooth piece
        double step = h;
        double fd = 0.0;
        for (int attempt = 0; attempt < 12; ++attempt) {
            uint64_t pat_plus = 0, pat_minus = 0;
            param.data[slot.index] = original + step;
            const double plus = detail::probe_objective(probe_net, input, probe, &pat_plus);
            param.data[slot.index] = original - step;
            const double minus = detail::probe_objective(probe_net, input, probe, &pat_minus);
            param.data[slot.index] = original;
            fd = (plus - minus) / (2.0 * step);
            if (pat_plus == base_pattern && pat_minus == base_pattern) break;
            step *= 0.25;
        }
        errors[s] = detail::rel_error(slot.analytic, fd);
    });

    // one entry per parameter tensor
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (!net.layers[i].has_params()) continue;
        report.entries.push_back({param_name(i, true), 0.0, true});
        report.entries.push_back({param_name(i, false), 0.0, true});
    }
    for (std::size_t s = 0; s < slots.size(); ++s) {
        const std::string name = param_name(slots[s].layer, slots[s].is_weight);
        for (auto& e : report.entries) {
            if (e.param == name) {
                e.max_rel_error = std::max(e.max_rel_error, errors[s]);
                e.pass = e.max_rel_error < tolerance;
            }
        }
    }
    for (const auto& e : report.entries) {
        report.max_rel_error = std::max(report.max_rel_error, e.max_rel_error);
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

// Checks every parameter of `net` against central finite differences of a
// random probe objective. h must be > 0.
template <typename T>
GradCheckReport grad_check(const Network<T>& net, const Tensor<T>& input, double h,
                           double tolerance, uint64_t probe_seed = 17) {
    if (!(h > 0.0)) throw ConfigError("grad_check: h must be > 0");
    Network<double> dnet = net.template cast<double>();
    Tensor<double> dinput = input.template cast<double>();
    const int64_t out_size = shape_size(dnet.output_shape());
    Rng rng(probe_seed);
    std::vector<double> probe(static_cast<std::size_t>(out_size));
    for (auto& p : probe) p = rng.uniform(-1.0, 1.0);

    Trace<double> trace;
    forward(dnet, dinput, &trace);
    Tensor<double> upstream = Tensor<double>::from(dnet.output_shape(), probe);
    const GradientSet<double> analytic = backward(dnet, trace, upstream);
    return compare_with_fd(dnet, dinput, probe, analytic, h, tolerance);
}

}  // namespace rhm
