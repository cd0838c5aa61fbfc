#pragma once

#include <cstdint>
#include <string_view>

namespace fairaffect::detail {

// splitmix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Counter-based generator value keyed by up to four words. Draws are
// independent of evaluation order, which keeps parallel or re-ordered
// generation deterministic.
inline std::uint64_t keyed_bits(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                std::uint64_t c = 0) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

inline double bits_to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double keyed_unit(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
    return bits_to_unit(keyed_bits(seed, a, b, c));
}

inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Sequential stream for shuffles and other inherently ordered draws.
class SplitMixStream {
  public:
    explicit SplitMixStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() { return mix64(state_++); }

    // value in [0, bound); modulo bias is irrelevant at these scales
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

  private:
    std::uint64_t state_;
};

}  // namespace fairaffect::detail
