#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rhm/bytes.hpp"
#include "rhm/contrastive.hpp"
#include "rhm/error.hpp"

namespace rhm::io {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_loss_history(const std::filesystem::path& path,
                               const std::vector<EpochStats>& history) {
    std::string out = "epoch,mean_loss,active_triplet_fraction\n";
    for (const auto& e : history) {
        out += std::to_string(e.epoch) + "," + format_double(e.mean_loss) + "," +
               format_double(e.active_triplet_fraction) + "\n";
    }
    atomic_write_text(path, out);
}

struct HealthRow {
    uint32_t wheel_id = 0;
    uint64_t timestamp = 0;
    std::string detector;
    double value = 0.0;
};

inline void write_health_csv(const std::filesystem::path& path,
                             const std::vector<HealthRow>& rows) {
    std::string out = "wheel_id,timestamp,detector,value\n";
    for (const auto& r : rows) {
        out += std::to_string(r.wheel_id) + "," + std::to_string(r.timestamp) + "," + r.detector +
               "," + format_double(r.value) + "\n";
    }
    atomic_write_text(path, out);
}

inline std::vector<HealthRow> read_health_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty health csv " + path.string());
    if (line != "wheel_id,timestamp,detector,value")
        throw IoError("unexpected health csv header in " + path.string());
    std::vector<HealthRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        HealthRow r;
        if (!std::getline(ss, field, ',')) throw IoError("bad health csv row: " + line);
        r.wheel_id = static_cast<uint32_t>(std::stoul(field));
        if (!std::getline(ss, field, ',')) throw IoError("bad health csv row: " + line);
        r.timestamp = std::stoull(field);
        if (!std::getline(ss, r.detector, ',')) throw IoError("bad health csv row: " + line);
        if (!std::getline(ss, field)) throw IoError("bad health csv row: " + line);
        r.value = std::strtod(field.c_str(), nullptr);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace rhm::io
