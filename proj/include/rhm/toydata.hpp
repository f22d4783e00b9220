#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rhm/error.hpp"
#include "rhm/rng.hpp"

namespace rhm {

// Synthetic 3-category 1-D signals for the supervised task. The category is
// a bump at a class-specific position; a sinusoidal nuisance tone correlates
// with the category in training but is shifted in the test split, so a model
// that keys on the tone collapses out of distribution.

struct ToyConfig {
    int signal_length = 256;
    int train_per_class = 240;
    int test_per_class = 120;
    double class_amp = 2.0;
    double confounder_amp = 1.4;
    double noise = 0.1;
    double correlation = 0.85;  // P(confounder == class) in training

    void validate() const {
        if (signal_length < 32) throw ConfigError("toy: signal length too short");
        if (train_per_class < 1 || test_per_class < 1) throw ConfigError("toy: empty split");
        if (!(correlation >= 0.0 && correlation <= 1.0))
            throw ConfigError("toy: correlation must be in [0, 1]");
    }
};

struct ToySample {
    std::vector<float> signal;
    int label = 0;
    int confounder = 0;
};

struct ToyDataset {
    std::vector<ToySample> train;
    std::vector<ToySample> test;
};

namespace toydetail {

inline ToySample make_sample(const ToyConfig& cfg, int label, int confounder, Rng& rng) {
    static constexpr double kCenters[3] = {0.25, 0.5, 0.75};
    static constexpr double kTones[3] = {3.0, 7.0, 13.0};
    ToySample s;
    s.label = label;
    s.confounder = confounder;
    s.signal.resize(static_cast<std::size_t>(cfg.signal_length));
    const double n = cfg.signal_length;
    const double center = kCenters[label] * n;
    const double sigma = 0.04 * n;
    const double tone_phase = rng.uniform(0.0, 6.283185307179586);
    for (int i = 0; i < cfg.signal_length; ++i) {
        const double d = (i - center) / sigma;
        double v = cfg.class_amp * std::exp(-0.5 * d * d);
        v += cfg.confounder_amp *
             std::sin(6.283185307179586 * kTones[confounder] * i / n + tone_phase);
        v += cfg.noise * rng.normal();
        s.signal[static_cast<std::size_t>(i)] = static_cast<float>(v);
    }
    return s;
}

}  // namespace toydetail

inline ToyDataset make_toy_dataset(const ToyConfig& cfg, uint64_t seed) {
    cfg.validate();
    ToyDataset ds;
    Rng train_rng = Rng(seed).derive(0x70791ULL);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < cfg.train_per_class; ++i) {
            int confounder = c;
            if (train_rng.uniform() >= cfg.correlation)
                confounder = static_cast<int>((c + 1 + train_rng.uniform_index(2)) % 3);
            ds.train.push_back(toydetail::make_sample(cfg, c, confounder, train_rng));
        }
    }
    // test split: the nuisance tone is systematically shifted by one class
    Rng test_rng = Rng(seed).derive(0x70792ULL);
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < cfg.test_per_class; ++i)
            ds.test.push_back(toydetail::make_sample(cfg, c, (c + 1) % 3, test_rng));
    return ds;
}

}  // namespace rhm
