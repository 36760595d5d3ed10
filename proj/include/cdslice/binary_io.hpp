#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cdslice/error.hpp"

namespace cdslice::io {

/// Little-endian byte sink.
class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s);
    }

    const std::vector<char>& buffer() const noexcept { return buf_; }
    void save(const std::filesystem::path& path) const;

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    std::vector<char> buf_;
};

/// Little-endian byte source; every read past the end raises FormatError
/// naming the offset.
class ByteReader {
public:
    explicit ByteReader(std::vector<char> data, std::string what = "file")
        : buf_(std::move(data)), what_(std::move(what)) {}

    static ByteReader from_file(const std::filesystem::path& path);

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return buf_.size() - pos_; }

    std::string bytes(std::size_t n) {
        need(n);
        std::string s(buf_.data() + pos_, n);
        pos_ += n;
        return s;
    }
    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str(std::size_t max_len = 1 << 20) {
        const std::size_t at = pos_;
        const std::uint32_t n = u32();
        if (n > max_len) fail("string length " + std::to_string(n) + " too large", at);
        return bytes(n);
    }

    void expect_magic(std::string_view magic) {
        const std::size_t at = pos_;
        if (remaining() < magic.size() || bytes(magic.size()) != magic)
            fail("bad magic, expected \"" + std::string(magic) + "\"", at);
    }

    [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
        throw FormatError(what_ + ": " + msg + " at offset " + std::to_string(at));
    }
    [[noreturn]] void fail(const std::string& msg) const { fail(msg, pos_); }

private:
    void need(std::size_t n) const {
        if (n > remaining())
            fail("truncated, needed " + std::to_string(n) + " bytes but " + std::to_string(remaining()) + " remain");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }

    std::vector<char> buf_;
    std::string what_;
    std::size_t pos_ = 0;
};

std::vector<char> read_file_bytes(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace cdslice::io
