#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace pathways {

// Every random decision in the toolkit draws from a named sub-stream of one
// master seed, so whole experiment runs replay bit-for-bit.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline uint64_t substream_seed(uint64_t master, std::string_view name) {
    return splitmix64(master ^ splitmix64(fnv1a64(name)));
}

inline std::mt19937_64 substream(uint64_t master, std::string_view name) {
    return std::mt19937_64(substream_seed(master, name));
}

}  // namespace pathways
