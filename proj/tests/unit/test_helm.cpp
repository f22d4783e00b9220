#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "rhm/helm.hpp"
#include "rhm/rng.hpp"

using namespace rhm;

TEST_CASE("soft threshold operator pointwise") {
    REQUIRE(soft_threshold(3.0, 1.0) == 2.0);
    REQUIRE(soft_threshold(-3.0, 1.0) == -2.0);
    REQUIRE(soft_threshold(0.5, 1.0) == 0.0);
    REQUIRE(soft_threshold(-0.5, 1.0) == 0.0);
    REQUIRE(soft_threshold(0.0, 0.0) == 0.0);
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const double v = rng.uniform(-5.0, 5.0);
        const double t = rng.uniform(0.0, 2.0);
        const double expected = (v > 0 ? 1.0 : -1.0) * std::max(std::fabs(v) - t, 0.0);
        REQUIRE(soft_threshold(v, t) == Catch::Approx(expected).margin(1e-12));
    }
}

TEST_CASE("ista with identity design is a single soft threshold") {
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(2, 2);
    Eigen::MatrixXd x(2, 1);
    x << 3.0, 0.0005;
    auto result = ista_l1_solve(h, x, 1e-3, 100, 1e-12);
    REQUIRE(result.beta(0, 0) == Catch::Approx(3.0 - 0.001).margin(1e-9));
    REQUIRE(result.beta(1, 0) == 0.0);
}

TEST_CASE("ista with lambda 0 matches least squares") {
    Eigen::MatrixXd h(4, 2);
    h << 1.0, 0.5, -0.3, 1.2, 0.8, -0.7, 0.2, 0.9;
    Eigen::MatrixXd x(4, 1);
    x << 1.0, 2.0, -0.5, 0.3;
    auto result = ista_l1_solve(h, x, 0.0, 20000, 1e-16);
    const Eigen::MatrixXd ls = (h.transpose() * h).ldlt().solve(h.transpose() * x);
    REQUIRE(result.beta(0, 0) == Catch::Approx(ls(0, 0)).margin(1e-6));
    REQUIRE(result.beta(1, 0) == Catch::Approx(ls(1, 0)).margin(1e-6));
}

TEST_CASE("ista objective never increases") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        Eigen::MatrixXd h(12, 5);
        Eigen::MatrixXd x(12, 3);
        for (int i = 0; i < h.size(); ++i) h.data()[i] = rng.uniform(-1.0, 1.0);
        for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
        auto result = ista_l1_solve(h, x, 0.05, 300, 1e-14);
        for (std::size_t i = 1; i < result.objective.size(); ++i)
            REQUIRE(result.objective[i] <= result.objective[i - 1] + 1e-12);
    }
}

TEST_CASE("l1 penalty produces exact zeros on generic data") {
    Rng rng(17);
    Eigen::MatrixXd h(30, 10);
    for (int i = 0; i < h.size(); ++i) h.data()[i] = rng.uniform(-1.0, 1.0);
    Eigen::MatrixXd x(30, 4);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
    auto result = ista_l1_solve(h, x, 2.0, 500, 1e-14);
    int zeros = 0;
    for (int i = 0; i < result.beta.size(); ++i)
        if (result.beta.data()[i] == 0.0) ++zeros;
    REQUIRE(zeros > 0);
}

TEST_CASE("occ ridge solution matches the closed form on a 3x2 system") {
    // w = (H'H + C I)^-1 H' 1
    Eigen::MatrixXd h(3, 2);
    h << 1.0, 0.2, -0.4, 0.9, 0.3, -0.5;
    const double c = 1e-5;
    const Eigen::MatrixXd lhs = h.transpose() * h + c * Eigen::MatrixXd::Identity(2, 2);
    const Eigen::VectorXd rhs = h.transpose() * Eigen::VectorXd::Ones(3);
    const Eigen::VectorXd direct = lhs.inverse() * rhs;
    const Eigen::VectorXd solved = lhs.ldlt().solve(rhs);
    REQUIRE((direct - solved).lpNorm<Eigen::Infinity>() < 1e-8);
}

namespace {

std::vector<std::vector<float>> toy_signals(std::size_t n, int dim, uint64_t seed) {
    Rng rng(seed);
    std::vector<std::vector<float>> out(n, std::vector<float>(static_cast<std::size_t>(dim)));
    for (auto& s : out)
        for (auto& v : s) v = static_cast<float>(1.0 + 0.2 * rng.uniform(-1.0, 1.0));
    return out;
}

}  // namespace

TEST_CASE("huge ridge constant drives the occ output to zero") {
    auto signals = toy_signals(20, 16, 4);
    HelmConfig cfg;
    cfg.layer_units = {8, 8};
    cfg.occ_units = 10;
    cfg.ridge_c = 1e12;
    auto model = fit_helm(signals, cfg, 3);
    const double out = helm_occ_output(model, signals[0]);
    REQUIRE(std::fabs(out) < 1e-6);
    // outputs ~ 0 -> |1 - out| ~ 1 -> calibration scale ~ 1 -> health ~ 1
    REQUIRE(helm_health(model, signals[0]) == Catch::Approx(1.0).margin(1e-5));
}

TEST_CASE("helm fitting is deterministic per seed") {
    auto signals = toy_signals(24, 32, 9);
    HelmConfig cfg;
    cfg.layer_units = {6, 6, 6};
    cfg.occ_units = 12;
    auto a = fit_helm(signals, cfg, 42);
    auto b = fit_helm(signals, cfg, 42);
    REQUIRE(a.scale == b.scale);
    for (std::size_t l = 0; l < a.beta.size(); ++l) {
        REQUIRE((a.random_weights[l] - b.random_weights[l]).lpNorm<Eigen::Infinity>() == 0.0);
        REQUIRE((a.beta[l] - b.beta[l]).lpNorm<Eigen::Infinity>() == 0.0);
    }
    auto c = fit_helm(signals, cfg, 43);
    REQUIRE((a.random_weights[0] - c.random_weights[0]).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("helm health calibration keeps training mostly at or below one") {
    auto signals = toy_signals(150, 64, 21);
    HelmConfig cfg;
    cfg.layer_units = {10, 10};
    cfg.occ_units = 20;
    auto model = fit_helm(signals, cfg, 7);
    int above = 0;
    for (const auto& s : signals)
        if (helm_health(model, s) > 1.0) ++above;
    REQUIRE(static_cast<double>(above) / 150.0 <= 0.01);
    REQUIRE(helm_health(model, signals[3]) >= 0.0);
}

TEST_CASE("helm save/load reproduces health outputs bit-exactly") {
    auto signals = toy_signals(30, 24, 2);
    HelmConfig cfg;
    cfg.layer_units = {5, 5};
    cfg.occ_units = 8;
    auto model = fit_helm(signals, cfg, 11);
    auto decoded = decode_helm(encode_helm(model));
    for (const auto& s : signals)
        REQUIRE(helm_health(decoded, s) == helm_health(model, s));
    REQUIRE_THROWS_AS(helm_health(decoded, std::vector<float>(7, 1.0f)), DimensionError);
}

TEST_CASE("empty training set is an error") {
    HelmConfig cfg;
    REQUIRE_THROWS_AS(fit_helm({}, cfg, 1), DataError);
}
