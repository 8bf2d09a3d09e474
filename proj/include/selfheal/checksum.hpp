#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace selfheal {

/// 64-bit FNV-1a.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t hash = 0xcbf29ce484222325ULL) {
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string to_hex(std::uint64_t value);

}  // namespace selfheal
