#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rhm/error.hpp"

namespace rhm {

struct HealthPoint {
    uint64_t timestamp = 0;
    double value = 0.0;
};

// Time-ordered health indices for one wheel.
struct HealthSeries {
    uint32_t wheel_id = 0;
    std::vector<HealthPoint> points;
};

struct DetectionResult {
    uint32_t wheel_id = 0;
    std::string detector;
    bool flagged = false;
    std::optional<uint64_t> detection_timestamp;  // set iff flagged
};

// Ratio of peak dynamic load to static (mean) load. On a mean-normalized
// signal this is just the maximum.
inline double dyn_coeff(const std::vector<float>& signal) {
    if (signal.empty()) throw DataError("dyn_coeff: empty signal");
    double sum = 0.0;
    double mx = signal[0];
    for (float v : signal) {
        sum += v;
        mx = std::max(mx, static_cast<double>(v));
    }
    const double mean = sum / static_cast<double>(signal.size());
    if (!(mean > 0.0)) throw DataError("dyn_coeff: non-positive mean");
    return mx / mean;
}

// Flags the wheel when the median of `window` consecutive values exceeds the
// threshold; the detection time is the window's last element. Series shorter
// than the window are never flagged.
inline DetectionResult detect(const HealthSeries& series, double threshold,
                              const std::string& detector_name, int window = 5) {
    if (window < 1) throw ConfigError("detect: window must be >= 1");
    for (std::size_t i = 1; i < series.points.size(); ++i) {
        if (series.points[i].timestamp < series.points[i - 1].timestamp)
            throw OrderingError("health series for wheel " + std::to_string(series.wheel_id) +
                                " is not time-sorted");
    }
    DetectionResult result;
    result.wheel_id = series.wheel_id;
    result.detector = detector_name;
    const std::size_t n = series.points.size();
    if (n < static_cast<std::size_t>(window)) return result;
    std::vector<double> buf(static_cast<std::size_t>(window));
    for (std::size_t end = static_cast<std::size_t>(window); end <= n; ++end) {
        for (int j = 0; j < window; ++j)
            buf[static_cast<std::size_t>(j)] = series.points[end - window + j].value;
        std::nth_element(buf.begin(), buf.begin() + window / 2, buf.end());
        if (buf[static_cast<std::size_t>(window / 2)] > threshold) {
            result.flagged = true;
            result.detection_timestamp = series.points[end - 1].timestamp;
            return result;
        }
    }
    return result;
}

// OR-combination: flagged if any member flags, at the earliest member time.
inline DetectionResult ensemble_or(const std::vector<DetectionResult>& members,
                                   const std::string& detector_name = "ensemble") {
    if (members.empty()) throw ConfigError("ensemble_or: no member detections");
    DetectionResult result;
    result.wheel_id = members.front().wheel_id;
    result.detector = detector_name;
    for (const auto& m : members) {
        if (m.wheel_id != result.wheel_id)
            throw DataError("ensemble_or: wheel-id mismatch (" + std::to_string(m.wheel_id) +
                            " vs " + std::to_string(result.wheel_id) + ")");
        if (!m.flagged) continue;
        if (!result.flagged || *m.detection_timestamp < *result.detection_timestamp) {
            result.flagged = true;
            result.detection_timestamp = m.detection_timestamp;
        }
    }
    return result;
}

}  // namespace rhm
