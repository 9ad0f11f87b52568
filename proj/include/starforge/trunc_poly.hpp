#pragma once

#include <limits>
#include <map>
#include <string>

#include "starforge/multiindex.hpp"
#include "starforge/profile.hpp"
#include "starforge/rational.hpp"

namespace starforge {

// Degree of the zero element.  Kept distinct from every attainable degree so
// comparisons like deg(a) > Dx do the right thing on zero.
inline constexpr int kInfiniteDegree = std::numeric_limits<int>::max();

// Polynomial in x^1..x^d over CRational, stored as a sorted term map with no
// zero coefficients.  Zero is the empty map.  Arithmetic is exact; use
// reduce() to drop terms above a profile's x_degree.
struct TruncPoly {
    std::map<MIdx, CRational> terms;

    TruncPoly() = default;

    static TruncPoly constant(const CRational& c);
    static TruncPoly one() { return constant(CRational::one()); }
    static TruncPoly variable(int i);  // x^i, 1-based
    static TruncPoly monomial(const MIdx& m, const CRational& c);

    bool is_zero() const { return terms.empty(); }
    int degree() const;

    // Coefficient of x^m (zero when absent).
    const CRational& coeff(const MIdx& m) const;
    CRational constant_term() const { return coeff(MIdx{}); }

    void add_term(const MIdx& m, const CRational& c);

    TruncPoly operator-() const;
    TruncPoly& operator+=(const TruncPoly& o);
    TruncPoly& operator-=(const TruncPoly& o);
    friend TruncPoly operator+(TruncPoly a, const TruncPoly& b) { return a += b; }
    friend TruncPoly operator-(TruncPoly a, const TruncPoly& b) { return a -= b; }
    friend TruncPoly operator*(const TruncPoly& a, const TruncPoly& b);

    TruncPoly scaled(const CRational& c) const;
    TruncPoly dx(int i) const;  // d/dx^i

    friend bool operator==(const TruncPoly& a, const TruncPoly& b) {
        return a.terms == b.terms;
    }

    std::string str(int dim) const;
};

TruncPoly reduce(const TruncPoly& a, const TruncationProfile& p);

}  // namespace starforge
