#pragma once

// Little-endian primitives for the TRUVRF-* container formats. Explicit byte
// order keeps the files bit-exact across platforms.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "truvrf/common.hpp"

namespace truvrf::binio {

inline void write_bytes(std::ostream& os, const void* data, std::size_t n) {
    os.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::istream& is, void* data, std::size_t n, const char* what) {
    is.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
        throw format_error(std::string("truncated input while reading ") + what);
    }
}

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    auto u = static_cast<std::make_unsigned_t<T>>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>(u >> (8 * i));
    write_bytes(os, buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& is, const char* what) {
    static_assert(std::is_integral_v<T>);
    unsigned char buf[sizeof(T)];
    read_bytes(is, buf, sizeof(T), what);
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        u |= static_cast<std::make_unsigned_t<T>>(buf[i]) << (8 * i);
    }
    return static_cast<T>(u);
}

inline void write_f64(std::ostream& os, double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof(bits));
    write_le<std::uint64_t>(os, bits);
}

inline double read_f64(std::istream& is, const char* what) {
    const std::uint64_t bits = read_le<std::uint64_t>(is, what);
    double value;
    std::memcpy(&value, &bits, sizeof(value));
    return value;
}

inline void write_magic(std::ostream& os, const std::string& magic) {
    write_bytes(os, magic.data(), magic.size());
}

inline void expect_magic(std::istream& is, const std::string& magic) {
    std::string got(magic.size(), '\0');
    read_bytes(is, got.data(), got.size(), "magic");
    if (got != magic) throw format_error("bad magic: expected " + magic);
}

// Big-endian u32, as used by the IDX image format.
inline std::uint32_t read_u32_be(std::istream& is, const char* what) {
    unsigned char buf[4];
    read_bytes(is, buf, 4, what);
    return (static_cast<std::uint32_t>(buf[0]) << 24) | (static_cast<std::uint32_t>(buf[1]) << 16) |
           (static_cast<std::uint32_t>(buf[2]) << 8) | static_cast<std::uint32_t>(buf[3]);
}

inline void write_u32_be(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                            static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    write_bytes(os, buf, 4);
}

}  // namespace truvrf::binio
