#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rhm/bytes.hpp"
#include "rhm/error.hpp"

namespace rhm {

// nu-formulation one-class SVM (Schoelkopf) with RBF kernel, solved in the
// dual: min 1/2 a'Ka  s.t.  0 <= a_i <= 1/(nu n), sum a_i = 1.
// The decision value g(x) = sum_i a_i k(x_i, x) - rho is positive inside the
// healthy region; the health index is -g(x) scaled so the training data's
// 99th percentile sits at 1.

struct OcSvmConfig {
    double nu = 0.05;
    double gamma = 0.0;        // <= 0 selects the median heuristic
    double gamma_scale = 1.0;  // multiplier on the heuristic (smaller = smoother boundary)
    double tolerance = 1e-4;
    int64_t max_iterations = 2'000'000;
};

struct OcSvmModel {
    std::vector<std::vector<float>> support_vectors;
    std::vector<double> alpha;  // in [0, 1/(nu n)], sums to 1 with the dropped zeros
    double rho = 0.0;
    double gamma = 1.0;
    double scale = 1.0;  // calibration scale s
    double nu = 0.0;
    int dim = 0;
    bool degenerate = false;
    bool converged = false;
};

namespace detail {

inline double sq_dist(const float* a, const float* b, int dim) {
    double acc = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

// 1 / median squared pairwise distance, on a subsample when n is large.
inline double median_heuristic_gamma(const std::vector<std::vector<float>>& x, int dim) {
    const std::size_t n = x.size();
    const std::size_t cap = 1200;
    const std::size_t step = n > cap ? n / cap : 1;
    std::vector<double> d2;
    for (std::size_t i = 0; i < n; i += step)
        for (std::size_t j = i + step; j < n; j += step)
            d2.push_back(sq_dist(x[i].data(), x[j].data(), dim));
    if (d2.empty()) return 1.0;
    std::nth_element(d2.begin(), d2.begin() + d2.size() / 2, d2.end());
    const double median = d2[d2.size() / 2];
    return median > 0.0 ? 1.0 / median : 1.0;
}

}  // namespace detail

inline double decision_value(const OcSvmModel& model, const std::vector<float>& feature);

inline OcSvmModel fit_ocsvm(const std::vector<std::vector<float>>& features,
                            const OcSvmConfig& config = {}) {
    const std::size_t n = features.size();
    if (n < 2) throw DataError("fit_ocsvm: need at least 2 training features");
    if (!(config.nu > 0.0 && config.nu <= 1.0)) throw ConfigError("fit_ocsvm: nu must be in (0, 1]");
    const int dim = static_cast<int>(features[0].size());
    for (const auto& f : features) {
        if (static_cast<int>(f.size()) != dim)
            throw DimensionError("fit_ocsvm: inconsistent feature dimensions");
        for (float v : f)
            if (!std::isfinite(v)) throw NumericError("fit_ocsvm: non-finite feature value");
    }

    OcSvmModel model;
    model.nu = config.nu;
    model.dim = dim;

    double max_d2 = 0.0;
    for (std::size_t i = 1; i < n; ++i)
        max_d2 = std::max(max_d2, detail::sq_dist(features[0].data(), features[i].data(), dim));
    if (max_d2 == 0.0) {
        // all points identical: zero-width boundary around the single point
        model.degenerate = true;
        model.converged = true;
        model.gamma = 1.0;
        model.support_vectors = {features[0]};
        model.alpha = {1.0};
        model.rho = 1.0;
        model.scale = 1e-9;
        return model;
    }

    model.gamma = config.gamma > 0.0
                      ? config.gamma
                      : config.gamma_scale * detail::median_heuristic_gamma(features, dim);

    // Gram matrix in float (92 MB at n = 4800); gradient kept in double.
    std::vector<float> gram(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        gram[i * n + i] = 1.0f;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double k = std::exp(-model.gamma *
                                      detail::sq_dist(features[i].data(), features[j].data(), dim));
            gram[i * n + j] = static_cast<float>(k);
            gram[j * n + i] = static_cast<float>(k);
        }
    }

    const double c = 1.0 / (config.nu * static_cast<double>(n));
    std::vector<double> alpha(n, 0.0);
    const std::size_t full = static_cast<std::size_t>(config.nu * static_cast<double>(n));
    for (std::size_t i = 0; i < full && i < n; ++i) alpha[i] = c;
    double assigned = static_cast<double>(full) * c;
    if (full < n && assigned < 1.0) alpha[full] = 1.0 - assigned;

    std::vector<double> grad(n, 0.0);  // (K alpha)_i
    for (std::size_t j = 0; j < n; ++j) {
        if (alpha[j] == 0.0) continue;
        const float* col = gram.data() + j * n;
        const double aj = alpha[j];
        for (std::size_t i = 0; i < n; ++i) grad[i] += aj * col[i];
    }

    const double bound_eps = c * 1e-12;
    int64_t iter = 0;
    for (; iter < config.max_iterations; ++iter) {
        // maximal violating pair: move mass from the largest gradient (must
        // have alpha > 0) toward the smallest (must have headroom below c)
        std::size_t up = n, low = n;
        double g_up = std::numeric_limits<double>::infinity();
        double g_low = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] < c - bound_eps && grad[i] < g_up) {
                g_up = grad[i];
                up = i;
            }
            if (alpha[i] > bound_eps && grad[i] > g_low) {
                g_low = grad[i];
                low = i;
            }
        }
        if (up == n || low == n || up == low) break;
        if (g_low - g_up < config.tolerance) break;

        const double k_uu = 1.0, k_ll = 1.0;
        const double k_ul = static_cast<double>(gram[up * n + low]);
        const double curvature = std::max(k_uu + k_ll - 2.0 * k_ul, 1e-12);
        double delta = (g_low - g_up) / curvature;
        delta = std::min(delta, c - alpha[up]);
        delta = std::min(delta, alpha[low]);
        if (delta <= 0.0) break;
        alpha[up] += delta;
        alpha[low] -= delta;
        if (alpha[low] < bound_eps) alpha[low] = 0.0;
        if (alpha[up] > c - bound_eps) alpha[up] = c;

        const float* col_u = gram.data() + up * n;
        const float* col_l = gram.data() + low * n;
        for (std::size_t i = 0; i < n; ++i)
            grad[i] += delta * (static_cast<double>(col_u[i]) - static_cast<double>(col_l[i]));
    }
    model.converged = iter < config.max_iterations;

    // rho from free support vectors, else the bound midpoint
    double rho_sum = 0.0;
    int free_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > bound_eps && alpha[i] < c - bound_eps) {
            rho_sum += grad[i];
            ++free_count;
        }
    }
    if (free_count > 0) {
        model.rho = rho_sum / free_count;
    } else {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (alpha[i] < c - bound_eps) lo = std::min(lo, grad[i]);
            if (alpha[i] > bound_eps) hi = std::max(hi, grad[i]);
        }
        model.rho = 0.5 * (lo + hi);
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] > 0.0) {
            model.support_vectors.push_back(features[i]);
            model.alpha.push_back(alpha[i]);
        }
    }

    // calibration: 99th percentile of |decision values| on the training data,
    // recomputed through the inference path so the percentile statement holds
    // for health_index exactly
    std::vector<double> abs_dec(n);
    for (std::size_t i = 0; i < n; ++i)
        abs_dec[i] = std::fabs(decision_value(model, features[i]));
    std::sort(abs_dec.begin(), abs_dec.end());
    std::size_t idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
    idx = std::min(idx == 0 ? 0 : idx - 1, n - 1);
    model.scale = std::max(abs_dec[idx], 1e-9);
    return model;
}

// Raw decision value g(x); positive inside the healthy region.
inline double decision_value(const OcSvmModel& model, const std::vector<float>& feature) {
    if (static_cast<int>(feature.size()) != model.dim)
        throw DimensionError("ocsvm decision: expected feature of dimension " +
                             std::to_string(model.dim) + ", got " +
                             std::to_string(feature.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
        const double d2 =
            detail::sq_dist(model.support_vectors[i].data(), feature.data(), model.dim);
        acc += model.alpha[i] * std::exp(-model.gamma * d2);
    }
    return acc - model.rho;
}

// Calibrated health index: higher = less healthy; the training data
// concentrates at or below ~1 by construction.
inline double health_index(const OcSvmModel& model, const std::vector<float>& feature) {
    return -decision_value(model, feature) / model.scale;
}

inline std::vector<uint8_t> encode_ocsvm(const OcSvmModel& model) {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(model.support_vectors.size()));
    w.u32(static_cast<uint32_t>(model.dim));
    w.f64(model.rho);
    w.f64(model.gamma);
    w.f64(model.scale);
    w.f64(model.nu);
    w.u8(model.degenerate ? 1 : 0);
    w.u8(model.converged ? 1 : 0);
    for (const auto& sv : model.support_vectors)
        w.f32_block(sv.data(), sv.size());
    for (double a : model.alpha) w.f64(a);
    return w.take();
}

inline OcSvmModel decode_ocsvm(const std::vector<uint8_t>& payload) {
    ByteReader r(payload);
    OcSvmModel model;
    const uint32_t n_sv = r.u32();
    model.dim = static_cast<int>(r.u32());
    model.rho = r.f64();
    model.gamma = r.f64();
    model.scale = r.f64();
    model.nu = r.f64();
    model.degenerate = r.u8() != 0;
    model.converged = r.u8() != 0;
    model.support_vectors.assign(n_sv, std::vector<float>(static_cast<std::size_t>(model.dim)));
    for (auto& sv : model.support_vectors) r.f32_block(sv.data(), sv.size());
    model.alpha.resize(n_sv);
    for (auto& a : model.alpha) a = r.f64();
    if (r.remaining() != 0) throw IoError("trailing bytes in ocsvm section");
    return model;
}

}  // namespace rhm
