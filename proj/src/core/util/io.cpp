#include "core/util/io.hpp"

#include <cstring>
#include <fstream>

#include "core/util/error.hpp"

namespace pixelrep {

std::vector<uint8_t> read_binary_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), ErrorCode::Io, "cannot open file: ", path);
    f.seekg(0, std::ios::end);
    std::vector<uint8_t> data(size_t(f.tellg()));
    f.seekg(0);
    f.read(reinterpret_cast<char*>(data.data()), std::streamsize(data.size()));
    require(f.good() || data.empty(), ErrorCode::Io, "read failed: ", path);
    return data;
}

std::string read_text_file(const std::string& path) {
    auto b = read_binary_file(path);
    return std::string(b.begin(), b.end());
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream f(path);
    require(f.good(), ErrorCode::Io, "cannot open file: ", path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

void write_binary_file(const std::string& path, const void* data, size_t size) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), ErrorCode::Io, "cannot write file: ", path);
    f.write(static_cast<const char*>(data), std::streamsize(size));
    require(f.good(), ErrorCode::Io, "write failed: ", path);
}

void write_text_file(const std::string& path, const std::string& text) {
    write_binary_file(path, text.data(), text.size());
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    require(!ec, ErrorCode::Io, "cannot create directory: ", path, " (", ec.message(), ")");
}

uint64_t fnv1a64(const void* data, size_t size) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hex64(uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[size_t(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

uint8_t ByteReader::u8() {
    require(pos + 1 <= size, ErrorCode::Io, "truncated stream");
    return p[pos++];
}

uint32_t ByteReader::u32() {
    require(pos + 4 <= size, ErrorCode::Io, "truncated stream");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(p[pos + size_t(i)]) << (8 * i);
    pos += 4;
    return v;
}

uint64_t ByteReader::u64() {
    require(pos + 8 <= size, ErrorCode::Io, "truncated stream");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= uint64_t(p[pos + size_t(i)]) << (8 * i);
    pos += 8;
    return v;
}

void ByteReader::raw(void* out, size_t n) {
    require(pos + n <= size, ErrorCode::Io, "truncated stream");
    std::memcpy(out, p + pos, n);
    pos += n;
}

}  // namespace pixelrep
