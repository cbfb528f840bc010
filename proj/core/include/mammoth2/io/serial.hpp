#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "mammoth2/errors.hpp"

// Little-endian primitives for the binary file formats. Serialization is
// byte-explicit so files are portable across hosts regardless of native
// endianness.
namespace m2::io {

inline void write_u32(std::ostream& os, uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double v) {
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    __builtin_memcpy(&bits, &v, 8);
    write_u64(os, bits);
}

inline void write_str(std::ostream& os, const std::string& s) {
    write_u64(os, s.size());
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    M2_CHECK(is.good(), "unexpected end of file");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    M2_CHECK(is.good(), "unexpected end of file");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream& is) {
    uint64_t bits = read_u64(is);
    double v;
    __builtin_memcpy(&v, &bits, 8);
    return v;
}

inline std::string read_str(std::istream& is, uint64_t max_len = 1 << 20) {
    uint64_t n = read_u64(is);
    M2_CHECK(n <= max_len, "string length field out of range");
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    M2_CHECK(is.good() || n == 0, "unexpected end of file");
    return s;
}

}  // namespace m2::io
