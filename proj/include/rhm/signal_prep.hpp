#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rhm/error.hpp"

namespace rhm {

constexpr int kSensorCount = 8;
constexpr int kPreparedLength = 1024;

// One wheel pass at one checkpoint: eight strain-gauge segments sampled at
// 10 kHz plus pass metadata.
struct Measurement {
    uint32_t wheel_id = 0;
    uint32_t checkpoint_id = 0;
    uint64_t timestamp = 0;  // seconds since epoch
    float speed_kmh = 0.0f;
    float load = 0.0f;
    std::array<std::vector<float>, kSensorCount> segments;

    void validate() const {
        for (int s = 0; s < kSensorCount; ++s) {
            if (segments[s].empty())
                throw DataError("measurement wheel " + std::to_string(wheel_id) + ": sensor " +
                                std::to_string(s) + " segment is empty");
            for (float v : segments[s]) {
                if (!std::isfinite(v))
                    throw DataError("measurement wheel " + std::to_string(wheel_id) + ": sensor " +
                                    std::to_string(s) + " has non-finite samples");
            }
        }
        if (!(load > 0.0f)) throw DataError("measurement load must be > 0");
    }
};

// Length-1024, mean-1 signal ready for the models.
struct PreparedSignal {
    std::vector<float> values;  // exactly kPreparedLength
    uint32_t wheel_id = 0;
    uint64_t timestamp = 0;
};

inline std::vector<float> concatenate_sensors(const Measurement& m) {
    std::size_t total = 0;
    for (int s = 0; s < kSensorCount; ++s) {
        if (m.segments[s].empty())
            throw DataError("sensor " + std::to_string(s) + ": missing or empty segment");
        total += m.segments[s].size();
    }
    std::vector<float> out;
    out.reserve(total);
    for (int s = 0; s < kSensorCount; ++s)
        out.insert(out.end(), m.segments[s].begin(), m.segments[s].end());
    return out;
}

// Endpoint-preserving linear resampling to target_length points.
inline std::vector<float> resample_linear(const std::vector<float>& signal,
                                          int target_length = kPreparedLength) {
    if (signal.size() < 2) throw DataError("resample_linear needs at least 2 samples");
    if (target_length < 2) throw DataError("resample target length must be >= 2");
    const std::size_t n = signal.size();
    std::vector<float> out(static_cast<std::size_t>(target_length));
    const double scale = static_cast<double>(n - 1) / static_cast<double>(target_length - 1);
    for (int i = 0; i < target_length; ++i) {
        const double pos = i * scale;
        std::size_t lo = static_cast<std::size_t>(pos);
        if (lo >= n - 1) lo = n - 2;
        const double frac = pos - static_cast<double>(lo);
        out[static_cast<std::size_t>(i)] =
            static_cast<float>((1.0 - frac) * signal[lo] + frac * signal[lo + 1]);
    }
    out.front() = signal.front();
    out.back() = signal.back();
    return out;
}

// Divides by the mean, so the static load becomes 1. Keeps dynCoeff intact.
inline std::vector<float> normalize_load(const std::vector<float>& signal) {
    if (signal.empty()) throw DataError("normalize_load: empty signal");
    double sum = 0.0;
    for (float v : signal) sum += v;
    const double mean = sum / static_cast<double>(signal.size());
    if (!(mean > 0.0)) throw DataError("normalize_load: non-positive mean (sensor fault?)");
    std::vector<float> out(signal.size());
    for (std::size_t i = 0; i < signal.size(); ++i)
        out[i] = static_cast<float>(signal[i] / mean);
    return out;
}

// concatenate -> resample to 1024 -> normalize by mean
inline PreparedSignal prepare(const Measurement& m) {
    PreparedSignal p;
    p.wheel_id = m.wheel_id;
    p.timestamp = m.timestamp;
    p.values = normalize_load(resample_linear(concatenate_sensors(m), kPreparedLength));
    return p;
}

}  // namespace rhm
