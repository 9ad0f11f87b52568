#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "starforge/profile.hpp"

namespace starforge {

// Exponent multi-index (a1,..,ad).  Entries beyond the active dimension stay
// zero, so lexicographic comparison of the full array agrees with comparison
// of the d-tuple.
struct MIdx {
    std::array<std::uint8_t, kMaxDim> e{};

    MIdx() = default;

    static MIdx unit(int i) {
        MIdx m;
        m.e[i] = 1;
        return m;
    }

    int degree() const {
        int s = 0;
        for (auto v : e) s += v;
        return s;
    }

    bool is_zero() const {
        for (auto v : e) if (v) return false;
        return true;
    }

    int operator[](int i) const { return e[i]; }

    MIdx bumped(int i, int by = 1) const {
        MIdx m = *this;
        m.e[i] = static_cast<std::uint8_t>(m.e[i] + by);
        return m;
    }

    // Lowers entry i by one; caller checks e[i] > 0.
    MIdx lowered(int i) const {
        MIdx m = *this;
        m.e[i] = static_cast<std::uint8_t>(m.e[i] - 1);
        return m;
    }

    friend MIdx operator+(const MIdx& a, const MIdx& b) {
        MIdx m;
        for (int i = 0; i < kMaxDim; ++i)
            m.e[i] = static_cast<std::uint8_t>(a.e[i] + b.e[i]);
        return m;
    }

    friend auto operator<=>(const MIdx& a, const MIdx& b) = default;

    // "(a1,..,ad)" with exactly dim entries.
    std::string str(int dim) const;
};

// Subset of {1..d} as a bitmask; bit i-1 stands for dx^i.  Serialized in
// ascending index order.
struct DxMask {
    std::uint16_t bits = 0;

    DxMask() = default;
    explicit DxMask(std::uint16_t b) : bits(b) {}

    int size() const { return __builtin_popcount(bits); }
    bool empty() const { return bits == 0; }
    bool has(int i) const { return (bits >> (i - 1)) & 1u; }

    // Lexicographic order on the sorted index lists, the order used for
    // canonical term listings; {} < {1} < {1,2} < {1,3} < {2} < {2,3}.
    static bool lex_less(DxMask a, DxMask b);

    friend bool operator==(DxMask a, DxMask b) { return a.bits == b.bits; }

    std::string str() const;
};

// Sign of reordering the concatenation (a, b) of two ascending index lists
// into one ascending list: (-1)^{inversions}.  Returns 0 when they collide.
int koszul_sign(DxMask a, DxMask b);

// dx^{i} wedged in front of the ascending list s: sign and resulting mask.
// Returns 0 sign when i already occurs.
int wedge_front(int i, DxMask s, DxMask* out);

}  // namespace starforge
