#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "rhm/error.hpp"

namespace rhm {

// Little-endian buffer codecs. x86 is little-endian; memcpy keeps the
// accesses alignment-safe either way.
static_assert(sizeof(float) == 4 && sizeof(double) == 8);

class ByteWriter {
public:
    void u8(uint8_t v) { raw(&v, 1); }
    void u16(uint16_t v) { raw(&v, 2); }
    void u32(uint32_t v) { raw(&v, 4); }
    void u64(uint64_t v) { raw(&v, 8); }
    void i32(int32_t v) { raw(&v, 4); }
    void f32(float v) { raw(&v, 4); }
    void f64(double v) { raw(&v, 8); }

    void f32_block(const float* p, std::size_t n) { raw(p, n * 4); }
    void f64_block(const double* p, std::size_t n) { raw(p, n * 8); }

    void tag(const char (&t)[5]) { raw(t, 4); }

    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }

    const std::vector<uint8_t>& bytes() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    std::vector<uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const uint8_t* data, std::size_t size) : data_(data), size_(size) {}
    explicit ByteReader(const std::vector<uint8_t>& v) : data_(v.data()), size_(v.size()) {}

    uint8_t u8() { return get<uint8_t>(); }
    uint16_t u16() { return get<uint16_t>(); }
    uint32_t u32() { return get<uint32_t>(); }
    uint64_t u64() { return get<uint64_t>(); }
    int32_t i32() { return get<int32_t>(); }
    float f32() { return get<float>(); }
    double f64() { return get<double>(); }

    void f32_block(float* p, std::size_t n) { raw(p, n * 4); }
    void f64_block(double* p, std::size_t n) { raw(p, n * 8); }

    std::string tag() {
        char t[4];
        raw(t, 4);
        return std::string(t, 4);
    }

    void raw(void* p, std::size_t n) {
        if (pos_ + n > size_) throw IoError("truncated data: read past end of buffer");
        std::memcpy(p, data_ + pos_, n);
        pos_ += n;
    }

    std::size_t remaining() const { return size_ - pos_; }
    void skip(std::size_t n) {
        if (pos_ + n > size_) throw IoError("truncated data: skip past end of buffer");
        pos_ += n;
    }

private:
    template <typename T>
    T get() {
        T v;
        raw(&v, sizeof(T));
        return v;
    }

    const uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
};

inline std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

// Write via a temp file and rename, so readers never observe partial files.
inline void atomic_write_file(const std::filesystem::path& path, const void* data, std::size_t size) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw IoError("short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot finalize " + path.string() + ": " + ec.message());
    }
}

inline void atomic_write_file(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
    atomic_write_file(path, bytes.data(), bytes.size());
}

inline void atomic_write_text(const std::filesystem::path& path, const std::string& text) {
    atomic_write_file(path, text.data(), text.size());
}

}  // namespace rhm
