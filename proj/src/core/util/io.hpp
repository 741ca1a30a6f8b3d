#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pixelrep {

std::vector<uint8_t> read_binary_file(const std::string& path);
std::string read_text_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);
void write_binary_file(const std::string& path, const void* data, size_t size);
void write_text_file(const std::string& path, const std::string& text);
void ensure_dir(const std::string& path);

// FNV-1a; used for config/vocab fingerprints in manifests
uint64_t fnv1a64(const void* data, size_t size);
uint64_t fnv1a64(const std::string& s);
std::string hex64(uint64_t v);

// little-endian scalar packing for on-disk formats
struct ByteWriter {
    std::vector<uint8_t> bytes;
    void u8(uint8_t v) { bytes.push_back(v); }
    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(uint8_t(v >> (8 * i)));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(uint8_t(v >> (8 * i)));
    }
    void raw(const void* p, size_t n) {
        const uint8_t* b = static_cast<const uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
};

struct ByteReader {
    const uint8_t* p;
    size_t size;
    size_t pos = 0;

    bool eof() const { return pos >= size; }
    uint8_t u8();
    uint32_t u32();
    uint64_t u64();
    void raw(void* out, size_t n);
};

}  // namespace pixelrep
