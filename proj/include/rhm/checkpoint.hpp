#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rhm/bytes.hpp"
#include "rhm/error.hpp"
#include "rhm/network.hpp"

namespace rhm {

// Model container: magic "RHM1", u16 format version, u16 section count, then
// tagged sections (4-byte tag, u64 payload length, payload). Known tags:
// "NETW" (network), "OCSV" (one-class SVM), "HELM".
struct Checkpoint {
    static constexpr uint16_t kVersion = 1;

    std::map<std::string, std::vector<uint8_t>> sections;

    bool has(const std::string& tag) const { return sections.count(tag) != 0; }

    const std::vector<uint8_t>& section(const std::string& tag) const {
        auto it = sections.find(tag);
        if (it == sections.end()) throw IoError("checkpoint has no \"" + tag + "\" section");
        return it->second;
    }

    std::vector<uint8_t> serialize() const {
        ByteWriter w;
        w.raw("RHM1", 4);
        w.u16(kVersion);
        w.u16(static_cast<uint16_t>(sections.size()));
        for (const auto& [tag, payload] : sections) {
            if (tag.size() != 4) throw IoError("section tag must be 4 bytes: \"" + tag + "\"");
            w.raw(tag.data(), 4);
            w.u64(payload.size());
            w.raw(payload.data(), payload.size());
        }
        return w.take();
    }

    static Checkpoint deserialize(const std::vector<uint8_t>& bytes) {
        ByteReader r(bytes);
        char magic[4];
        r.raw(magic, 4);
        if (std::string(magic, 4) != "RHM1") throw IoError("not a checkpoint file (bad magic)");
        const uint16_t version = r.u16();
        if (version != kVersion)
            throw IoError("unsupported checkpoint version " + std::to_string(version));
        const uint16_t count = r.u16();
        Checkpoint ckpt;
        for (uint16_t i = 0; i < count; ++i) {
            const std::string tag = r.tag();
            const uint64_t len = r.u64();
            if (len > r.remaining()) throw IoError("truncated section \"" + tag + "\"");
            std::vector<uint8_t> payload(len);
            if (len > 0) r.raw(payload.data(), len);
            ckpt.sections[tag] = std::move(payload);
        }
        return ckpt;
    }

    void save(const std::filesystem::path& path) const { atomic_write_file(path, serialize()); }

    static Checkpoint load(const std::filesystem::path& path) {
        return deserialize(read_file_bytes(path));
    }
};

// NETW payload: input shape, layer manifest (kind + dims), then f32
// parameter blocks in declaration order (weight, bias per layer).
inline std::vector<uint8_t> encode_network(const Network<float>& net) {
    ByteWriter w;
    w.u32(static_cast<uint32_t>(net.input_shape.size()));
    for (int d : net.input_shape) w.i32(d);
    w.u32(static_cast<uint32_t>(net.layers.size()));
    for (const auto& l : net.layers) {
        w.u8(static_cast<uint8_t>(l.spec.kind));
        w.i32(l.spec.filters);
        w.i32(l.spec.kernel_size);
        w.i32(l.spec.stride);
        w.i32(l.spec.in_dim);
        w.i32(l.spec.out_dim);
        w.f32(l.spec.slope);
    }
    for (const auto& l : net.layers) {
        if (!l.has_params()) continue;
        w.f32_block(l.weight.data.data(), l.weight.data.size());
        w.f32_block(l.bias.data.data(), l.bias.data.size());
    }
    return w.take();
}

inline Network<float> decode_network(const std::vector<uint8_t>& payload) {
    ByteReader r(payload);
    const uint32_t ndims = r.u32();
    std::vector<int> input_shape;
    for (uint32_t i = 0; i < ndims; ++i) input_shape.push_back(r.i32());
    const uint32_t nlayers = r.u32();
    std::vector<LayerSpec> specs(nlayers);
    for (auto& s : specs) {
        const uint8_t kind = r.u8();
        if (kind > static_cast<uint8_t>(LayerKind::Softmax))
            throw IoError("unknown layer kind " + std::to_string(kind));
        s.kind = static_cast<LayerKind>(kind);
        s.filters = r.i32();
        s.kernel_size = r.i32();
        s.stride = r.i32();
        s.in_dim = r.i32();
        s.out_dim = r.i32();
        s.slope = r.f32();
    }
    Network<float> net = build_network<float>(input_shape, specs, /*seed=*/0);
    for (auto& l : net.layers) {
        if (!l.has_params()) continue;
        r.f32_block(l.weight.data.data(), l.weight.data.size());
        r.f32_block(l.bias.data.data(), l.bias.data.size());
    }
    if (r.remaining() != 0) throw IoError("trailing bytes in network section");
    return net;
}

}  // namespace rhm
