#pragma once

#include <map>
#include <string>

#include "starforge/profile.hpp"
#include "starforge/trunc_poly.hpp"

namespace starforge {

// Formal power series in h with TruncPoly coefficients, stored sparsely by
// h-power with no zero entries.  Arithmetic is exact in the h direction too;
// reduce() applies a profile's window.
struct HSeries {
    std::map<int, TruncPoly> coeffs;

    HSeries() = default;

    static HSeries one();
    static HSeries constant(const CRational& c);
    static HSeries from_poly(const TruncPoly& p, int hpow = 0);

    bool is_zero() const { return coeffs.empty(); }

    // Lowest h-power carrying a nonzero coefficient; kInfiniteDegree for 0.
    int h_filtration() const {
        return coeffs.empty() ? kInfiniteDegree : coeffs.begin()->first;
    }

    // Coefficient of h^k (zero polynomial when absent).
    const TruncPoly& coeff(int k) const;

    void add_term(int k, const TruncPoly& p);

    HSeries operator-() const;
    HSeries& operator+=(const HSeries& o);
    HSeries& operator-=(const HSeries& o);
    friend HSeries operator+(HSeries a, const HSeries& b) { return a += b; }
    friend HSeries operator-(HSeries a, const HSeries& b) { return a -= b; }
    friend HSeries operator*(const HSeries& a, const HSeries& b);

    HSeries scaled(const CRational& c) const;
    HSeries shifted(int dk) const;  // multiply by h^dk, dk >= 0
    HSeries dx(int i) const;

    friend bool operator==(const HSeries& a, const HSeries& b) {
        return a.coeffs == b.coeffs;
    }

    // Canonical "coeff h^k x^(a1,..,ad)" terms joined by " + ", h-power
    // ascending, x-index lexicographic; "0" for zero.
    std::string str(int dim) const;
};

HSeries reduce(const HSeries& a, const TruncationProfile& p);

// Multiplicative inverse mod the profile ideal.  Requires an invertible
// constant (h^0, x^0) coefficient; throws NonInvertible otherwise.
HSeries series_invert(const HSeries& s, const TruncationProfile& p);

}  // namespace starforge
