#include "starforge/multiindex.hpp"

#include <string>

namespace starforge {

std::string MIdx::str(int dim) const {
    std::string s = "(";
    for (int i = 0; i < dim; ++i) {
        if (i) s += ",";
        s += std::to_string(static_cast<int>(e[i]));
    }
    return s + ")";
}

bool DxMask::lex_less(DxMask a, DxMask b) {
    std::uint16_t x = a.bits, y = b.bits;
    while (x && y) {
        int i = __builtin_ctz(x), j = __builtin_ctz(y);
        if (i != j) return i < j;
        x &= x - 1;
        y &= y - 1;
    }
    return !x && y;
}

std::string DxMask::str() const {
    std::string s = "{";
    bool first = true;
    for (int i = 1; i <= kMaxDim; ++i) {
        if (!has(i)) continue;
        if (!first) s += ",";
        s += std::to_string(i);
        first = false;
    }
    return s + "}";
}

int koszul_sign(DxMask a, DxMask b) {
    if (a.bits & b.bits) return 0;
    int inversions = 0;
    std::uint16_t x = a.bits;
    while (x) {
        int i = __builtin_ctz(x);
        inversions += __builtin_popcount(b.bits & ((1u << i) - 1));
        x &= x - 1;
    }
    return (inversions & 1) ? -1 : 1;
}

int wedge_front(int i, DxMask s, DxMask* out) {
    if (s.has(i)) return 0;
    out->bits = static_cast<std::uint16_t>(s.bits | (1u << (i - 1)));
    int below = __builtin_popcount(s.bits & ((1u << (i - 1)) - 1));
    return (below & 1) ? -1 : 1;
}

}  // namespace starforge
