#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rhm/error.hpp"
#include "rhm/parallel.hpp"
#include "rhm/rng.hpp"
#include "rhm/signal_prep.hpp"
#include "rhm/timeline.hpp"

namespace rhm {

// Synthetic wayside-monitoring fleet. Each wheel pass produces eight
// strain-gauge segments covering one wheel revolution: static load plus
// low-order out-of-roundness harmonics, a degradation harmonic that grows
// with days since re-profiling, per-checkpoint sensor gains, white noise,
// and (for fault wheels) a tread signature ramping up across the orange zone.

// Relative amplitudes and widths of the tread signatures (fractions of the
// static load and of the circumference). The crack peak stays at or below
// 40% of shelling's so its relative subtlety carries through.
struct FaultShape {
    double shelling_amp = 0.35;
    double shelling_sigma = 0.008;  // single bump width; the cluster spans ~5%
    double crack_amp = 0.135;
    double crack_sigma = 0.006;
    double flat_amp = 1.35;
    double flat_sigma = 0.0025;

    void validate() const {
        if (crack_amp > 0.4 * shelling_amp + 1e-12)
            throw ConfigError("fault shape: crack amplitude must stay <= 40% of shelling");
        if (shelling_amp <= 0.0 || crack_amp <= 0.0 || flat_amp <= 0.0)
            throw ConfigError("fault shape: amplitudes must be positive");
    }
};

struct FleetConfig {
    int n_wheels = 8;
    int monitoring_days = 60;
    double passes_per_day_mean = 5.0;
    double speed_min_kmh = 40.0;
    double speed_max_kmh = 120.0;
    double load_min = 80.0;
    double load_max = 120.0;
    int checkpoint_count = 4;
    double gain_sigma = 0.03;  // per-checkpoint, per-sensor calibration spread
    double noise_level = 0.02;
    std::vector<int> workshop_visits = {0};
    std::vector<FaultAssignment> faults;
    FaultShape fault_shape;

    // base signal shape
    double nominal_speed_kmh = 80.0;
    int nominal_length = 1600;       // concatenated samples at nominal speed
    double harmonic_amp = 0.02;      // out-of-roundness scale (orders 1..3)
    double harmonic_spread = 0.5;    // per-wheel amplitude factor ~ U(1 -/+ spread)
    double polygon_jitter = 0.2;     // per-wheel deviation from the fleet wear pattern
    double degradation_rate = 6e-4;  // added harmonic amplitude per day since visit
    double rotation_jitter = 1.0;    // fraction of a revolution randomized per pass

    void validate() const {
        if (n_wheels < 1 || monitoring_days < 1) throw ConfigError("fleet: empty fleet or schedule");
        if (!(passes_per_day_mean > 0.0)) throw ConfigError("fleet: passes per day must be > 0");
        if (!(speed_min_kmh > 0.0 && speed_max_kmh >= speed_min_kmh))
            throw ConfigError("fleet: bad speed range");
        if (!(load_min > 0.0 && load_max >= load_min)) throw ConfigError("fleet: bad load range");
        if (checkpoint_count < 1) throw ConfigError("fleet: need at least one checkpoint");
        if (workshop_visits.empty() || workshop_visits.front() != 0)
            throw ConfigError("fleet: workshop visits must start at day 0");
        if (!std::is_sorted(workshop_visits.begin(), workshop_visits.end()))
            throw ConfigError("fleet: workshop visits must be sorted");
        if (!(rotation_jitter >= 0.0 && rotation_jitter <= 1.0))
            throw ConfigError("fleet: rotation jitter must be in [0, 1]");
        if (!(harmonic_spread >= 0.0 && harmonic_spread < 1.0))
            throw ConfigError("fleet: harmonic spread must be in [0, 1)");
        fault_shape.validate();
        for (const auto& f : faults) {
            if (f.wheel_id >= static_cast<uint32_t>(n_wheels))
                throw ConfigError("fleet: fault assigned to wheel " + std::to_string(f.wheel_id) +
                                  " outside the fleet");
            int next_boundary = monitoring_days;
            for (int v : workshop_visits)
                if (v > f.onset_day) {
                    next_boundary = std::min(next_boundary, v);
                    break;
                }
            if (!(f.onset_day < f.manifest_day && f.manifest_day < next_boundary))
                throw ConfigError("fleet: fault on wheel " + std::to_string(f.wheel_id) +
                                  " must satisfy onset < manifest < next workshop visit");
            if (f.onset_day < 0) throw ConfigError("fleet: fault onset before monitoring start");
        }
    }
};

struct Fleet {
    std::vector<WheelTimeline> wheels;
    std::vector<int> workshop_visits;
    int monitoring_days = 0;
};

namespace simdetail {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Polygonization orders excited by tread wear. The relative weighting is a
// property of the wheel type and re-profiling process, so it is drawn once
// per fleet and only jittered per wheel; every wheel then degrades along
// (nearly) the same spectral direction.
constexpr int kPolygonOrders[] = {2, 3, 7, 11, 13, 17, 19, 23};
constexpr int kPolygonCount = 8;

struct PolygonPattern {
    double weight[kPolygonCount];  // unit norm
};

inline PolygonPattern draw_polygon_pattern(Rng& rng) {
    PolygonPattern p;
    double norm_sq = 0.0;
    for (int k = 0; k < kPolygonCount; ++k) {
        p.weight[k] = rng.uniform(0.3, 1.0);
        norm_sq += p.weight[k] * p.weight[k];
    }
    const double norm = std::sqrt(norm_sq);
    for (int k = 0; k < kPolygonCount; ++k) p.weight[k] /= norm;
    return p;
}

struct WheelCharacter {
    double harmonic_amp[3];
    double harmonic_phase[3];
    double polygon_weight[kPolygonCount];
    double polygon_phase[kPolygonCount];
    double fault_angle;  // fixed position of the tread signature on the wheel
};

inline WheelCharacter draw_character(Rng& rng, const FleetConfig& cfg,
                                     const PolygonPattern& fleet_pattern) {
    WheelCharacter ch;
    for (int k = 0; k < 3; ++k) {
        ch.harmonic_amp[k] =
            cfg.harmonic_amp * rng.uniform(1.0 - cfg.harmonic_spread, 1.0 + cfg.harmonic_spread);
        ch.harmonic_phase[k] = rng.uniform(0.0, kTwoPi);
    }
    double norm_sq = 0.0;
    for (int k = 0; k < kPolygonCount; ++k) {
        ch.polygon_weight[k] =
            fleet_pattern.weight[k] *
            rng.uniform(1.0 - cfg.polygon_jitter, 1.0 + cfg.polygon_jitter);
        norm_sq += ch.polygon_weight[k] * ch.polygon_weight[k];
        ch.polygon_phase[k] = rng.uniform(0.0, kTwoPi);
    }
    const double norm = std::sqrt(norm_sq);
    for (int k = 0; k < kPolygonCount; ++k) ch.polygon_weight[k] /= norm;
    ch.fault_angle = rng.uniform();
    return ch;
}

// Adds a Gaussian bump of the given height (relative units) centered at
// sample position `center` of the concatenated signal.
inline void add_bump(std::vector<double>& rel, double center, double sigma, double height) {
    const int n = static_cast<int>(rel.size());
    const int lo = static_cast<int>(std::floor(center - 4.0 * sigma));
    const int hi = static_cast<int>(std::ceil(center + 4.0 * sigma));
    for (int i = lo; i <= hi; ++i) {
        const double d = (static_cast<double>(i) - center) / sigma;
        const int idx = ((i % n) + n) % n;  // signature wraps around the wheel
        rel[static_cast<std::size_t>(idx)] += height * std::exp(-0.5 * d * d);
    }
}

inline void add_signature(std::vector<double>& rel, FaultKind kind, double severity,
                          double position_frac, double mean_level, const FaultShape& shape,
                          Rng& rng) {
    const double n = static_cast<double>(rel.size());
    const double center = position_frac * n;
    const double jitter = 1.0 + 0.05 * rng.uniform(-1.0, 1.0);
    switch (kind) {
        case FaultKind::Shelling: {
            // cluster of broad bumps spanning ~5% of the circumference
            const double spacing = 0.016 * n;
            const double sigma = shape.shelling_sigma * n * jitter;
            const double amp = shape.shelling_amp * severity * mean_level;
            add_bump(rel, center - spacing, sigma, 0.6 * amp);
            add_bump(rel, center, sigma, amp);
            add_bump(rel, center + spacing, sigma, 0.6 * amp);
            break;
        }
        case FaultKind::Crack: {
            // single narrow low-amplitude notch
            const double sigma = shape.crack_sigma * n * jitter;
            add_bump(rel, center, sigma, -shape.crack_amp * severity * mean_level);
            break;
        }
        case FaultKind::Flat: {
            // sharp impact once per revolution, small rebound dip after it
            const double sigma = shape.flat_sigma * n * jitter;
            const double amp = shape.flat_amp * severity * mean_level;
            add_bump(rel, center, sigma, amp);
            add_bump(rel, center + 3.0 * sigma, 2.0 * sigma, -0.15 * amp);
            break;
        }
    }
}

}  // namespace simdetail

// Applies a tread signature at an explicit angular position (fraction of a
// revolution measured along the concatenated signal). Severity 0 is the
// identity. The caller keeps the position fixed per wheel so consecutive
// passes carry the same defect.
inline void inject_fault_at(std::array<std::vector<float>, kSensorCount>& segments, FaultKind kind,
                            double severity, double position_frac, Rng& rng,
                            const FaultShape& shape = {}) {
    if (!(severity >= 0.0 && severity <= 1.0))
        throw ConfigError("inject_fault: severity must be in [0, 1]");
    if (severity == 0.0) return;
    std::size_t total = 0;
    for (const auto& s : segments) total += s.size();
    if (total == 0) throw DataError("inject_fault: empty segments");

    std::vector<double> rel(total, 0.0);
    double mean = 0.0;
    for (const auto& s : segments)
        for (float v : s) mean += v;
    mean /= static_cast<double>(total);

    simdetail::add_signature(rel, kind, severity, position_frac, mean, shape, rng);

    std::size_t pos = 0;
    for (auto& s : segments)
        for (auto& v : s) v = static_cast<float>(v + rel[pos++]);
}

// Spec-facing variant: the angular position comes from the generator.
inline void inject_fault(std::array<std::vector<float>, kSensorCount>& segments, FaultKind kind,
                         double severity, Rng& rng, const FaultShape& shape = {}) {
    const double pos = rng.uniform();
    inject_fault_at(segments, kind, severity, pos, rng, shape);
}

namespace simdetail {

inline double severity_at(const FaultAssignment& fault, double day_frac) {
    if (day_frac < fault.onset_day) return 0.0;
    if (day_frac >= fault.manifest_day) return 1.0;
    return (day_frac - fault.onset_day) /
           static_cast<double>(fault.manifest_day - fault.onset_day);
}

inline int last_visit_before(const std::vector<int>& visits, int day) {
    int best = visits.front();
    for (int v : visits)
        if (v <= day) best = v;
    return best;
}

inline WheelTimeline simulate_wheel(const FleetConfig& cfg, uint64_t seed, uint32_t wheel_id,
                                    const FaultAssignment* fault,
                                    const std::vector<std::array<double, kSensorCount>>& gains,
                                    const PolygonPattern& fleet_pattern) {
    Rng root = Rng(seed).derive(0x57484545ULL + wheel_id);  // per-wheel stream
    Rng char_rng = root.derive(1);
    Rng sched_rng = root.derive(2);
    Rng noise_root = root.derive(3);
    Rng fault_root = root.derive(4);
    const WheelCharacter ch = draw_character(char_rng, cfg, fleet_pattern);

    WheelTimeline tl;
    tl.wheel_id = wheel_id;
    if (fault) {
        tl.fault = *fault;
        tl.annotation = ZoneAnnotation{fault->onset_day, fault->manifest_day, cfg.monitoring_days};
        tl.annotation->validate();
    }

    uint64_t meas_index = 0;
    for (int day = 0; day < cfg.monitoring_days; ++day) {
        const int n_passes = sched_rng.poisson(cfg.passes_per_day_mean);
        std::vector<double> times(static_cast<std::size_t>(n_passes));
        for (auto& t : times) t = sched_rng.uniform(5.0 * 3600.0, 23.0 * 3600.0);
        std::sort(times.begin(), times.end());
        const int visit_day = last_visit_before(cfg.workshop_visits, day);

        for (int p = 0; p < n_passes; ++p) {
            Measurement m;
            m.wheel_id = wheel_id;
            m.timestamp = static_cast<uint64_t>(day) * kSecondsPerDay +
                          static_cast<uint64_t>(times[static_cast<std::size_t>(p)]);
            m.speed_kmh = static_cast<float>(sched_rng.uniform(cfg.speed_min_kmh, cfg.speed_max_kmh));
            m.load = static_cast<float>(sched_rng.uniform(cfg.load_min, cfg.load_max));
            m.checkpoint_id = static_cast<uint32_t>(sched_rng.uniform_index(
                static_cast<uint64_t>(cfg.checkpoint_count)));
            const double rotation = cfg.rotation_jitter * sched_rng.uniform();

            const int total_len = std::clamp(
                static_cast<int>(std::lround(cfg.nominal_length * cfg.nominal_speed_kmh /
                                             m.speed_kmh)),
                kSensorCount * 16, 8192);
            const double day_frac =
                static_cast<double>(m.timestamp) / static_cast<double>(kSecondsPerDay);
            const double degradation =
                cfg.degradation_rate * (day_frac - static_cast<double>(visit_day));

            Rng noise_rng = noise_root.derive(meas_index);
            const auto& gain = gains[m.checkpoint_id];
            int offset = 0;
            for (int s = 0; s < kSensorCount; ++s) {
                const int seg_len = total_len / kSensorCount + (s < total_len % kSensorCount ? 1 : 0);
                auto& seg = m.segments[static_cast<std::size_t>(s)];
                seg.resize(static_cast<std::size_t>(seg_len));
                for (int i = 0; i < seg_len; ++i) {
                    const double frac =
                        static_cast<double>(offset + i) / static_cast<double>(total_len);
                    const double angle = kTwoPi * (frac + rotation);
                    double rel = 1.0;
                    for (int k = 0; k < 3; ++k)
                        rel += ch.harmonic_amp[k] * std::sin((k + 1) * angle + ch.harmonic_phase[k]);
                    // tread wear excites the polygonization band
                    for (int k = 0; k < kPolygonCount; ++k)
                        rel += degradation * ch.polygon_weight[k] *
                               std::sin(kPolygonOrders[k] * angle + ch.polygon_phase[k]);
                    rel += cfg.noise_level * noise_rng.normal();
                    seg[static_cast<std::size_t>(i)] =
                        static_cast<float>(m.load * gain[static_cast<std::size_t>(s)] * rel);
                }
                offset += seg_len;
            }

            if (fault) {
                const double severity = severity_at(*fault, day_frac);
                if (severity > 0.0) {
                    Rng fault_rng = fault_root.derive(meas_index);
                    // the signature sits on the wheel, so it shifts with the
                    // same per-pass rotation as the base profile
                    const double pos = std::fmod(ch.fault_angle + rotation, 1.0);
                    inject_fault_at(m.segments, fault->kind, severity, pos, fault_rng,
                                    cfg.fault_shape);
                }
            }
            tl.measurements.push_back(std::move(m));
            ++meas_index;
        }
    }
    return tl;
}

}  // namespace simdetail

inline Fleet simulate_fleet(const FleetConfig& cfg, uint64_t seed) {
    cfg.validate();

    // per-checkpoint, per-sensor calibration gains from the master stream
    Rng gain_rng = Rng(seed).derive(0x47414953ULL);
    std::vector<std::array<double, kSensorCount>> gains(
        static_cast<std::size_t>(cfg.checkpoint_count));
    for (auto& g : gains)
        for (auto& v : g) v = std::max(0.2, gain_rng.normal(1.0, cfg.gain_sigma));

    Rng pattern_rng = Rng(seed).derive(0x504F4C59ULL);
    const simdetail::PolygonPattern fleet_pattern = simdetail::draw_polygon_pattern(pattern_rng);

    Fleet fleet;
    fleet.workshop_visits = cfg.workshop_visits;
    fleet.monitoring_days = cfg.monitoring_days;
    fleet.wheels.resize(static_cast<std::size_t>(cfg.n_wheels));
    parallel_for(static_cast<std::size_t>(cfg.n_wheels), [&](std::size_t w) {
        const FaultAssignment* fault = nullptr;
        for (const auto& f : cfg.faults)
            if (f.wheel_id == static_cast<uint32_t>(w)) fault = &f;
        fleet.wheels[w] = simdetail::simulate_wheel(cfg, seed, static_cast<uint32_t>(w), fault,
                                                    gains, fleet_pattern);
    });
    return fleet;
}

}  // namespace rhm
