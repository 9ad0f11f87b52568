#pragma once

#include <string>

namespace starforge {

// Truncation window for every series the engine produces: powers of h beyond
// hbar_order, x-monomials beyond total degree x_degree and y-monomials beyond
// y_degree are discarded.  dim is the number of base coordinates (and of
// fiber coordinates, and of dx generators).
struct TruncationProfile {
    int hbar_order = 6;
    int x_degree = 4;
    int y_degree = 6;
    int dim = 2;

    TruncationProfile() = default;
    TruncationProfile(int n, int dx, int dy, int d);

    void validate() const;

    bool operator==(const TruncationProfile&) const = default;

    std::string str() const;
};

inline constexpr int kMaxDim = 8;

}  // namespace starforge
