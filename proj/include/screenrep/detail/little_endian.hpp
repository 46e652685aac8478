#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

namespace screenrep::detail {

inline void append_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t read_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

inline void append_f32(std::string& out, float f) { append_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline float read_f32(const char* p) { return std::bit_cast<float>(read_u32(p)); }

inline std::string encode_f32(std::span<const float> values) {
    std::string out;
    out.reserve(values.size() * 4);
    for (float v : values) append_f32(out, v);
    return out;
}

inline std::vector<float> decode_f32(const char* p, std::size_t count) {
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = read_f32(p + 4 * i);
    return out;
}

}  // namespace screenrep::detail
