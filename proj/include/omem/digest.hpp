#pragma once

#include <cstdint>
#include <string_view>

namespace omem {

/// FNV-1a over a byte range. Used for payload digests and output
/// fingerprints; stable across platforms, unlike std::hash.
inline std::uint64_t fnv1a64(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s) {
    return fnv1a64(s.data(), s.size());
}

inline std::uint64_t fnv1a64_mix(std::uint64_t a, std::uint64_t b) {
    const std::uint64_t words[2] = {a, b};
    return fnv1a64(words, sizeof(words));
}

}  // namespace omem
