#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "rhm/bytes.hpp"
#include "rhm/error.hpp"
#include "rhm/signal_prep.hpp"
#include "rhm/timeline.hpp"
#include "rhm/wheelsim.hpp"

// On-disk dataset layout:
//   <root>/manifest.json          roster, visits, splits, annotations
//   <root>/wheels/wheel_<id>.wlc  binary measurement records
//
// WLC1 record file: magic "WLC1", u32 record count, then per record
// u64 timestamp, u32 wheel id, u32 checkpoint id, f32 speed, f32 load,
// 8 x (u32 length + that many little-endian f32 samples).

namespace rhm::io {

using ordered_json = nlohmann::ordered_json;

inline std::vector<uint8_t> encode_measurements(const std::vector<Measurement>& measurements) {
    ByteWriter w;
    w.raw("WLC1", 4);
    w.u32(static_cast<uint32_t>(measurements.size()));
    for (const auto& m : measurements) {
        w.u64(m.timestamp);
        w.u32(m.wheel_id);
        w.u32(m.checkpoint_id);
        w.f32(m.speed_kmh);
        w.f32(m.load);
        for (const auto& seg : m.segments) {
            w.u32(static_cast<uint32_t>(seg.size()));
            w.f32_block(seg.data(), seg.size());
        }
    }
    return w.take();
}

inline std::vector<Measurement> decode_measurements(const std::vector<uint8_t>& bytes) {
    ByteReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::string(magic, 4) != "WLC1") throw IoError("not a WLC1 measurement file (bad magic)");
    const uint32_t count = r.u32();
    std::vector<Measurement> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        Measurement m;
        m.timestamp = r.u64();
        m.wheel_id = r.u32();
        m.checkpoint_id = r.u32();
        m.speed_kmh = r.f32();
        m.load = r.f32();
        for (auto& seg : m.segments) {
            const uint32_t len = r.u32();
            seg.resize(len);
            r.f32_block(seg.data(), len);
        }
        out.push_back(std::move(m));
    }
    if (r.remaining() != 0) throw IoError("trailing bytes in WLC1 file");
    return out;
}

inline std::string wheel_file_name(uint32_t wheel_id) {
    return "wheels/wheel_" + std::to_string(wheel_id) + ".wlc";
}

inline void write_dataset(const std::filesystem::path& root, const Fleet& fleet) {
    ordered_json manifest;
    manifest["format_version"] = 1;
    manifest["monitoring_days"] = fleet.monitoring_days;
    manifest["workshop_visits"] = fleet.workshop_visits;
    ordered_json wheels = ordered_json::array();
    for (const auto& w : fleet.wheels) {
        if (w.split == Split::Train && w.defective())
            throw DataError("train split must not contain defective wheels (wheel " +
                            std::to_string(w.wheel_id) + ")");
        ordered_json entry;
        entry["id"] = w.wheel_id;
        entry["split"] = w.split == Split::Train ? "train" : "test";
        entry["file"] = wheel_file_name(w.wheel_id);
        if (w.fault) {
            entry["fault"] = {{"kind", fault_kind_name(w.fault->kind)},
                              {"onset_day", w.fault->onset_day},
                              {"manifest_day", w.fault->manifest_day}};
            entry["annotation"] = {{"green_end_day", w.annotation->green_end_day},
                                   {"red_start_day", w.annotation->red_start_day},
                                   {"monitoring_end_day", w.annotation->monitoring_end_day}};
        } else {
            entry["fault"] = nullptr;
            entry["annotation"] = nullptr;
        }
        wheels.push_back(entry);
        atomic_write_file(root / wheel_file_name(w.wheel_id), encode_measurements(w.measurements));
    }
    manifest["wheels"] = wheels;
    atomic_write_text(root / "manifest.json", manifest.dump(2) + "\n");
}

inline Fleet load_dataset(const std::filesystem::path& root) {
    const auto manifest_path = root / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    ordered_json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed manifest: " + std::string(e.what()));
    }
    if (manifest.at("format_version").get<int>() != 1)
        throw IoError("unsupported dataset format version");

    Fleet fleet;
    fleet.monitoring_days = manifest.at("monitoring_days").get<int>();
    fleet.workshop_visits = manifest.at("workshop_visits").get<std::vector<int>>();
    for (const auto& entry : manifest.at("wheels")) {
        WheelTimeline tl;
        tl.wheel_id = entry.at("id").get<uint32_t>();
        const std::string split = entry.at("split").get<std::string>();
        if (split != "train" && split != "test")
            throw IoError("unknown split \"" + split + "\" in manifest");
        tl.split = split == "train" ? Split::Train : Split::Test;
        if (!entry.at("fault").is_null()) {
            const auto& f = entry.at("fault");
            FaultAssignment fault;
            fault.wheel_id = tl.wheel_id;
            fault.kind = fault_kind_from(f.at("kind").get<std::string>());
            fault.onset_day = f.at("onset_day").get<int>();
            fault.manifest_day = f.at("manifest_day").get<int>();
            tl.fault = fault;
            const auto& a = entry.at("annotation");
            ZoneAnnotation ann{a.at("green_end_day").get<int>(), a.at("red_start_day").get<int>(),
                               a.at("monitoring_end_day").get<int>()};
            ann.validate();
            tl.annotation = ann;
            if (tl.split == Split::Train)
                throw DataError("train split must not contain defective wheels (wheel " +
                                std::to_string(tl.wheel_id) + ")");
        }
        tl.measurements =
            decode_measurements(read_file_bytes(root / entry.at("file").get<std::string>()));
        fleet.wheels.push_back(std::move(tl));
    }
    return fleet;
}

// Prepared-signal cache, one file per wheel: magic "PSG1", u32 count, then
// per record u64 timestamp + 1024 f32.
inline void write_prepared(const std::filesystem::path& path,
                           const std::vector<PreparedSignal>& signals) {
    ByteWriter w;
    w.raw("PSG1", 4);
    w.u32(static_cast<uint32_t>(signals.size()));
    for (const auto& s : signals) {
        if (static_cast<int>(s.values.size()) != kPreparedLength)
            throw DataError("prepared signal has wrong length");
        w.u64(s.timestamp);
        w.f32_block(s.values.data(), s.values.size());
    }
    atomic_write_file(path, w.bytes());
}

inline std::vector<PreparedSignal> read_prepared(const std::filesystem::path& path,
                                                 uint32_t wheel_id) {
    const auto bytes = read_file_bytes(path);
    ByteReader r(bytes);
    char magic[4];
    r.raw(magic, 4);
    if (std::string(magic, 4) != "PSG1") throw IoError("not a prepared-signal file (bad magic)");
    const uint32_t count = r.u32();
    std::vector<PreparedSignal> out(count);
    for (auto& s : out) {
        s.wheel_id = wheel_id;
        s.timestamp = r.u64();
        s.values.resize(kPreparedLength);
        r.f32_block(s.values.data(), s.values.size());
    }
    if (r.remaining() != 0) throw IoError("trailing bytes in prepared-signal file");
    return out;
}

}  // namespace rhm::io
