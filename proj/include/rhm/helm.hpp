#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rhm/bytes.hpp"
#include "rhm/error.hpp"
#include "rhm/rng.hpp"

namespace rhm {

// Hierarchical extreme learning machine: stacked autoencoder layers whose
// output weights are solved by L1-regularized least squares (ISTA), plus a
// ridge one-class output layer trained against the constant target 1.

struct HelmConfig {
    std::vector<int> layer_units = {30, 30, 30, 30, 30};
    int occ_units = 100;
    double ridge_c = 1e-5;   // C
    double l1_lambda = 1e-3; // lambda
    double slope = 0.1;
    int ista_max_iters = 200;
    double ista_tol = 1e-7;
};

struct HelmModel {
    std::vector<Eigen::MatrixXd> random_weights;  // per layer: units x d_in (rows unit norm)
    std::vector<Eigen::MatrixXd> beta;            // per layer: units x d_in; encoding = act(x beta')
    Eigen::MatrixXd occ_weights;                  // occ_units x d_last
    Eigen::VectorXd occ_ridge;                    // occ_units
    double scale = 1.0;
    double slope = 0.1;
    int input_dim = 0;
};

inline double soft_threshold(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

struct IstaResult {
    Eigen::MatrixXd beta;
    std::vector<double> objective;  // one entry per iteration, non-increasing
    bool converged = false;
};

// min 1/2 ||H beta - X||_F^2 + lambda ||beta||_1 by iterative
// soft-thresholding with fixed step 1 / ||H'H||_2.
inline IstaResult ista_l1_solve(const Eigen::MatrixXd& H, const Eigen::MatrixXd& X, double lambda,
                                int max_iters = 200, double tol = 1e-7) {
    if (H.rows() != X.rows())
        throw DimensionError("ista_l1_solve: H and X row counts differ");
    if (lambda < 0.0) throw ConfigError("ista_l1_solve: lambda must be >= 0");
    if (!H.allFinite() || !X.allFinite()) throw NumericError("ista_l1_solve: non-finite input");

    const Eigen::MatrixXd gram = H.transpose() * H;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const double lipschitz = std::max(eig.eigenvalues().maxCoeff(), 1e-12);
    const double step = 1.0 / lipschitz;

    IstaResult result;
    result.beta = Eigen::MatrixXd::Zero(H.cols(), X.cols());
    Eigen::MatrixXd residual = -X;  // H*0 - X
    double prev_obj = std::numeric_limits<double>::infinity();
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::MatrixXd grad = H.transpose() * residual;
        Eigen::MatrixXd next = result.beta - step * grad;
        const double thresh = lambda * step;
        for (Eigen::Index j = 0; j < next.size(); ++j)
            next.data()[j] = soft_threshold(next.data()[j], thresh);
        result.beta = std::move(next);
        residual = H * result.beta - X;
        const double obj = 0.5 * residual.squaredNorm() + lambda * result.beta.lpNorm<1>();
        if (!std::isfinite(obj)) throw NumericError("ista_l1_solve: objective diverged");
        result.objective.push_back(obj);
        if (prev_obj < std::numeric_limits<double>::infinity()) {
            const double change = prev_obj - obj;
            if (change <= tol * std::max(1.0, std::fabs(prev_obj))) {
                result.converged = true;
                break;
            }
        }
        prev_obj = obj;
    }
    return result;
}

namespace detail {

inline Eigen::MatrixXd random_unit_rows(int rows, int cols, Rng& rng) {
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r) {
        double norm_sq = 0.0;
        for (int c = 0; c < cols; ++c) {
            const double v = rng.uniform(-1.0, 1.0);
            w(r, c) = v;
            norm_sq += v * v;
        }
        const double norm = std::sqrt(std::max(norm_sq, 1e-300));
        for (int c = 0; c < cols; ++c) w(r, c) /= norm;
    }
    return w;
}

inline void leaky_inplace(Eigen::MatrixXd& m, double slope) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double v = m.data()[i];
        if (v < 0.0) m.data()[i] = slope * v;
    }
}

}  // namespace detail

inline double helm_occ_output(const HelmModel& model, const std::vector<float>& signal);

inline HelmModel fit_helm(const std::vector<std::vector<float>>& signals,
                          const HelmConfig& config, uint64_t seed) {
    if (signals.empty()) throw DataError("fit_helm: empty training set");
    const int d = static_cast<int>(signals[0].size());
    const Eigen::Index n = static_cast<Eigen::Index>(signals.size());
    Eigen::MatrixXd x(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<int>(signals[static_cast<std::size_t>(i)].size()) != d)
            throw DimensionError("fit_helm: inconsistent signal lengths");
        for (int j = 0; j < d; ++j) x(i, j) = signals[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }

    HelmModel model;
    model.slope = config.slope;
    model.input_dim = d;
    Rng rng(seed);

    for (std::size_t layer = 0; layer < config.layer_units.size(); ++layer) {
        const int units = config.layer_units[layer];
        Eigen::MatrixXd w = detail::random_unit_rows(units, static_cast<int>(x.cols()), rng);
        Eigen::MatrixXd hidden = x * w.transpose();
        detail::leaky_inplace(hidden, config.slope);
        auto ista = ista_l1_solve(hidden, x, config.l1_lambda, config.ista_max_iters,
                                  config.ista_tol);
        model.random_weights.push_back(std::move(w));
        Eigen::MatrixXd encoded = x * ista.beta.transpose();
        detail::leaky_inplace(encoded, config.slope);
        model.beta.push_back(std::move(ista.beta));
        x = std::move(encoded);
    }

    // one-class layer: random expansion, ridge regression onto target 1
    model.occ_weights = detail::random_unit_rows(config.occ_units, static_cast<int>(x.cols()), rng);
    Eigen::MatrixXd h_occ = x * model.occ_weights.transpose();
    detail::leaky_inplace(h_occ, config.slope);
    const Eigen::MatrixXd lhs =
        h_occ.transpose() * h_occ +
        config.ridge_c * Eigen::MatrixXd::Identity(config.occ_units, config.occ_units);
    const Eigen::VectorXd rhs = h_occ.transpose() * Eigen::VectorXd::Ones(n);
    model.occ_ridge = lhs.ldlt().solve(rhs);

    // calibrate through the same per-sample path used at inference so the
    // percentile statement holds bit-exactly on the training data
    std::vector<double> errs(signals.size());
    for (std::size_t i = 0; i < signals.size(); ++i)
        errs[i] = std::fabs(1.0 - helm_occ_output(model, signals[i]));
    std::sort(errs.begin(), errs.end());
    std::size_t idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n)));
    idx = std::min(idx == 0 ? 0 : idx - 1, errs.size() - 1);
    model.scale = std::max(errs[idx], 1e-9);
    return model;
}

inline double helm_occ_output(const HelmModel& model, const std::vector<float>& signal) {
    if (static_cast<int>(signal.size()) != model.input_dim)
        throw DimensionError("helm: expected signal of length " + std::to_string(model.input_dim) +
                             ", got " + std::to_string(signal.size()));
    Eigen::RowVectorXd x(model.input_dim);
    for (int i = 0; i < model.input_dim; ++i) x(i) = signal[static_cast<std::size_t>(i)];
    for (const auto& beta : model.beta) {
        Eigen::RowVectorXd next = x * beta.transpose();
        for (Eigen::Index i = 0; i < next.size(); ++i)
            if (next(i) < 0.0) next(i) *= model.slope;
        x = std::move(next);
    }
    Eigen::RowVectorXd h = x * model.occ_weights.transpose();
    for (Eigen::Index i = 0; i < h.size(); ++i)
        if (h(i) < 0.0) h(i) *= model.slope;
    return h.dot(model.occ_ridge);
}

// |1 - occ output| scaled by the training calibration. Higher = less healthy.
inline double helm_health(const HelmModel& model, const std::vector<float>& signal) {
    return std::fabs(1.0 - helm_occ_output(model, signal)) / model.scale;
}

inline std::vector<uint8_t> encode_helm(const HelmModel& model) {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(model.beta.size()));
    w.u32(static_cast<uint32_t>(model.input_dim));
    w.f64(model.scale);
    w.f64(model.slope);
    auto write_matrix = [&w](const Eigen::MatrixXd& m) {
        w.u32(static_cast<uint32_t>(m.rows()));
        w.u32(static_cast<uint32_t>(m.cols()));
        w.f64_block(m.data(), static_cast<std::size_t>(m.size()));
    };
    for (std::size_t i = 0; i < model.beta.size(); ++i) {
        write_matrix(model.random_weights[i]);
        write_matrix(model.beta[i]);
    }
    write_matrix(model.occ_weights);
    w.u32(static_cast<uint32_t>(model.occ_ridge.size()));
    w.f64_block(model.occ_ridge.data(), static_cast<std::size_t>(model.occ_ridge.size()));
    return w.take();
}

inline HelmModel decode_helm(const std::vector<uint8_t>& payload) {
    ByteReader r(payload);
    HelmModel model;
    const uint32_t layers = r.u32();
    model.input_dim = static_cast<int>(r.u32());
    model.scale = r.f64();
    model.slope = r.f64();
    auto read_matrix = [&r]() {
        const uint32_t rows = r.u32();
        const uint32_t cols = r.u32();
        Eigen::MatrixXd m(rows, cols);
        r.f64_block(m.data(), static_cast<std::size_t>(m.size()));
        return m;
    };
    for (uint32_t i = 0; i < layers; ++i) {
        model.random_weights.push_back(read_matrix());
        model.beta.push_back(read_matrix());
    }
    model.occ_weights = read_matrix();
    const uint32_t ridge_n = r.u32();
    model.occ_ridge.resize(ridge_n);
    r.f64_block(model.occ_ridge.data(), ridge_n);
    if (r.remaining() != 0) throw IoError("trailing bytes in helm section");
    return model;
}

}  // namespace rhm
