#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace pesa {

/// FNV-1a 64-bit over raw bytes. Stable across platforms; used for content
/// versioning (templates, prompt constants) and deterministic id assignment,
/// not for anything adversarial.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string to_hex16(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline std::string content_hash(std::string_view bytes) {
    return to_hex16(fnv1a64(bytes));
}

}  // namespace pesa
