#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rhm/error.hpp"
#include "rhm/signal_prep.hpp"

namespace rhm {

constexpr uint64_t kSecondsPerDay = 86400;

inline int64_t day_of(uint64_t timestamp) { return static_cast<int64_t>(timestamp / kSecondsPerDay); }

enum class FaultKind : uint8_t { Shelling = 0, Crack = 1, Flat = 2 };

inline const char* fault_kind_name(FaultKind k) {
    switch (k) {
        case FaultKind::Shelling: return "shelling";
        case FaultKind::Crack: return "crack";
        case FaultKind::Flat: return "flat";
    }
    return "?";
}

inline FaultKind fault_kind_from(const std::string& name) {
    if (name == "shelling") return FaultKind::Shelling;
    if (name == "crack") return FaultKind::Crack;
    if (name == "flat") return FaultKind::Flat;
    throw ConfigError("unknown fault kind \"" + name + "\"");
}

struct FaultAssignment {
    uint32_t wheel_id = 0;
    FaultKind kind = FaultKind::Shelling;
    int onset_day = 0;     // fault starts growing (orange zone begins)
    int manifest_day = 0;  // fully manifested in the data (red zone begins)
};

// Ground-truth zones for a defective wheel, in days from monitoring start:
// green [0, green_end), orange [green_end, red_start), red [red_start, end].
struct ZoneAnnotation {
    int green_end_day = 0;
    int red_start_day = 0;
    int monitoring_end_day = 0;

    void validate() const {
        if (!(green_end_day <= red_start_day && red_start_day <= monitoring_end_day))
            throw DataError("zone annotation must satisfy green_end <= red_start <= monitoring_end");
    }
};

enum class Split : uint8_t { Train = 0, Test = 1 };

// All measurements of one wheel between workshop visits, time-sorted,
// plus ground truth when the wheel is defective.
struct WheelTimeline {
    uint32_t wheel_id = 0;
    Split split = Split::Train;
    std::vector<Measurement> measurements;
    std::optional<FaultAssignment> fault;
    std::optional<ZoneAnnotation> annotation;

    bool defective() const { return fault.has_value(); }
};

}  // namespace rhm
