#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rhm/detection.hpp"
#include "rhm/error.hpp"
#include "rhm/timeline.hpp"

namespace rhm {

enum class Zone : uint8_t { Green = 0, Orange = 1, Red = 2, Missed = 3 };

inline const char* zone_name(Zone z) {
    switch (z) {
        case Zone::Green: return "green";
        case Zone::Orange: return "orange";
        case Zone::Red: return "red";
        case Zone::Missed: return "missed";
    }
    return "?";
}

// Detection delay for one defective wheel. dt < 0: early (green zone),
// dt = 0: orange, dt > 0: late (red); dr = dt / DT only defined when late.
struct DelayMetrics {
    uint32_t wheel_id = 0;
    Zone zone = Zone::Missed;
    int dt_days = 0;
    std::optional<double> dr;
};

inline DelayMetrics delay_metrics(const DetectionResult& detection, const ZoneAnnotation& annotation) {
    annotation.validate();
    DelayMetrics m;
    m.wheel_id = detection.wheel_id;
    if (!detection.flagged) {
        m.zone = Zone::Missed;
        return m;
    }
    const int64_t det_day = day_of(*detection.detection_timestamp);
    if (det_day < annotation.green_end_day) {
        m.zone = Zone::Green;
        m.dt_days = static_cast<int>(det_day - annotation.green_end_day);
    } else if (det_day <= annotation.red_start_day) {
        // day resolution: a detection on the red-start day itself still has
        // dt = 0, which the zone rule maps to orange
        m.zone = Zone::Orange;
        m.dt_days = 0;
    } else {
        m.zone = Zone::Red;
        m.dt_days = static_cast<int>(det_day - annotation.red_start_day);
        const int total = annotation.monitoring_end_day - annotation.red_start_day;
        if (total <= 0) throw DataError("red zone has zero duration but detection is late");
        m.dr = static_cast<double>(m.dt_days) / static_cast<double>(total);
    }
    return m;
}

struct Confusion2 {
    int tp = 0, fn = 0, fp = 0, tn = 0;
    int total() const { return tp + fn + fp + tn; }
};

// Mean of per-class recalls; for two classes, (TPR + TNR) / 2.
inline double balanced_accuracy(const Confusion2& c) {
    if (c.tp + c.fn == 0 || c.tn + c.fp == 0)
        throw DataError("balanced accuracy undefined: an actual category is empty");
    const double tpr = static_cast<double>(c.tp) / (c.tp + c.fn);
    const double tnr = static_cast<double>(c.tn) / (c.tn + c.fp);
    return 0.5 * (tpr + tnr);
}

// rows = actual, cols = predicted
inline double balanced_accuracy_multi(const std::vector<std::vector<int>>& confusion) {
    double acc = 0.0;
    for (std::size_t r = 0; r < confusion.size(); ++r) {
        int row_total = 0;
        for (int v : confusion[r]) row_total += v;
        if (row_total == 0) throw DataError("balanced accuracy undefined: empty actual category");
        acc += static_cast<double>(confusion[r][r]) / row_total;
    }
    return acc / static_cast<double>(confusion.size());
}

struct ZoneHistogram {
    int green = 0, orange = 0, red = 0;
};

struct DrBuckets {
    int below_01 = 0;   // dr < 0.1
    int upto_05 = 0;    // 0.1 <= dr <= 0.5
    int above_05 = 0;   // dr > 0.5
};

struct WheelOutcome {
    uint32_t wheel_id = 0;
    bool defective = false;
    std::optional<FaultKind> kind;
    bool flagged = false;
    std::optional<int64_t> detection_day;
    std::optional<DelayMetrics> delay;  // defective wheels only
};

struct DetectorReport {
    std::string detector;
    Confusion2 confusion;
    std::optional<double> balanced_accuracy;  // absent when undefined
    ZoneHistogram zones;
    DrBuckets dr_buckets;
    std::map<std::string, Confusion2> per_kind;  // keyed by fault kind name (vs all healthy)
    std::map<std::string, ZoneHistogram> per_kind_zones;
    std::vector<WheelOutcome> wheels;
};

struct EvalReport {
    int defective_wheels = 0;
    int healthy_wheels = 0;
    std::vector<DetectorReport> detectors;
};

struct GroundTruthWheel {
    uint32_t wheel_id = 0;
    std::optional<FaultAssignment> fault;
    std::optional<ZoneAnnotation> annotation;
};

inline EvalReport build_report(
    const std::map<std::string, std::vector<DetectionResult>>& detections_per_detector,
    const std::vector<GroundTruthWheel>& ground_truth) {
    std::map<uint32_t, const GroundTruthWheel*> truth;
    int defective = 0;
    for (const auto& gt : ground_truth) {
        truth[gt.wheel_id] = &gt;
        if (gt.fault) ++defective;
    }

    EvalReport report;
    report.defective_wheels = defective;
    report.healthy_wheels = static_cast<int>(ground_truth.size()) - defective;

    for (const auto& [name, detections] : detections_per_detector) {
        DetectorReport dr;
        dr.detector = name;
        for (const auto& det : detections) {
            auto it = truth.find(det.wheel_id);
            if (it == truth.end())
                throw DataError("detection for wheel " + std::to_string(det.wheel_id) +
                                " absent from ground truth");
            const GroundTruthWheel& gt = *it->second;
            WheelOutcome outcome;
            outcome.wheel_id = det.wheel_id;
            outcome.defective = gt.fault.has_value();
            outcome.flagged = det.flagged;
            if (det.flagged) outcome.detection_day = day_of(*det.detection_timestamp);
            if (gt.fault) {
                outcome.kind = gt.fault->kind;
                const std::string kind = fault_kind_name(gt.fault->kind);
                DelayMetrics dm = delay_metrics(det, *gt.annotation);
                outcome.delay = dm;
                if (det.flagged) {
                    dr.confusion.tp += 1;
                    dr.per_kind[kind].tp += 1;
                    switch (dm.zone) {
                        case Zone::Green:
                            dr.zones.green += 1;
                            dr.per_kind_zones[kind].green += 1;
                            break;
                        case Zone::Orange:
                            dr.zones.orange += 1;
                            dr.per_kind_zones[kind].orange += 1;
                            break;
                        case Zone::Red:
                            dr.zones.red += 1;
                            dr.per_kind_zones[kind].red += 1;
                            if (*dm.dr < 0.1)
                                dr.dr_buckets.below_01 += 1;
                            else if (*dm.dr <= 0.5)
                                dr.dr_buckets.upto_05 += 1;
                            else
                                dr.dr_buckets.above_05 += 1;
                            break;
                        case Zone::Missed:
                            break;
                    }
                } else {
                    dr.confusion.fn += 1;
                    dr.per_kind[kind].fn += 1;
                }
            } else {
                if (det.flagged)
                    dr.confusion.fp += 1;
                else
                    dr.confusion.tn += 1;
            }
            dr.wheels.push_back(std::move(outcome));
        }
        if (dr.confusion.tp + dr.confusion.fn > 0 && dr.confusion.tn + dr.confusion.fp > 0)
            dr.balanced_accuracy = balanced_accuracy(dr.confusion);
        report.detectors.push_back(std::move(dr));
    }
    return report;
}

}  // namespace rhm
