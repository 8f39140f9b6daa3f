#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

// Little-endian scalar I/O shared by the binary file formats.
namespace rbe::detail {

template <typename T>
void write_le(std::ostream& out, T value) {
    unsigned char buf[sizeof(T)];
    for (size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = (uint64_t(value) >> (8 * i)) & 0xff;
    }
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
    unsigned char buf[sizeof(T)] = {};
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    uint64_t v = 0;
    for (size_t i = 0; i < sizeof(T); ++i) v |= uint64_t(buf[i]) << (8 * i);
    return T(v);
}

inline void write_f32(std::ostream& out, float value) {
    uint32_t bits;
    std::memcpy(&bits, &value, 4);
    write_le<uint32_t>(out, bits);
}

inline float read_f32(std::istream& in) {
    const uint32_t bits = read_le<uint32_t>(in);
    float value;
    std::memcpy(&value, &bits, 4);
    return value;
}

inline void write_f64(std::ostream& out, double value) {
    uint64_t bits;
    std::memcpy(&bits, &value, 8);
    write_le<uint64_t>(out, bits);
}

inline double read_f64(std::istream& in) {
    const uint64_t bits = read_le<uint64_t>(in);
    double value;
    std::memcpy(&value, &bits, 8);
    return value;
}

}  // namespace rbe::detail
