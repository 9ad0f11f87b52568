#pragma once

#include <map>
#include <string>

#include "starforge/hseries.hpp"
#include "starforge/multiindex.hpp"
#include "starforge/profile.hpp"
#include "starforge/rational.hpp"

namespace starforge {

// One monomial h^k x^a y^b dx^S.  Keys sort in the canonical term order:
// h-power, then x-index, then y-index lexicographically, then dx-subset.
struct WeylKey {
    int k = 0;
    MIdx a;
    MIdx b;
    DxMask s;

    friend bool operator==(const WeylKey& u, const WeylKey& v) {
        return u.k == v.k && u.a == v.a && u.b == v.b && u.s == v.s;
    }
    friend bool operator<(const WeylKey& u, const WeylKey& v) {
        if (u.k != v.k) return u.k < v.k;
        if (u.a != v.a) return u.a < v.a;
        if (u.b != v.b) return u.b < v.b;
        return DxMask::lex_less(u.s, v.s);
    }
};

// Element of the (truncated) Weyl algebra bundle chart: polynomial in x and
// y with anticommuting dx generators and formal h.  The product here is the
// plain graded-commutative one; the fiberwise deformed product lives with
// the flat-connection machinery.  Zero is the empty map and coefficients are
// never zero.
struct WeylElement {
    std::map<WeylKey, CRational> terms;

    WeylElement() = default;

    static WeylElement one();
    static WeylElement constant(const CRational& c);
    static WeylElement monomial(const WeylKey& key, const CRational& c);
    static WeylElement x_var(int i);   // x^i
    static WeylElement y_var(int i);   // y^i
    static WeylElement dx_gen(int i);  // dx^i
    static WeylElement h_pow(int k);
    static WeylElement from_hseries(const HSeries& s);

    bool is_zero() const { return terms.empty(); }

    const CRational& coeff(const WeylKey& key) const;
    void add_term(const WeylKey& key, const CRational& c);

    WeylElement operator-() const;
    WeylElement& operator+=(const WeylElement& o);
    WeylElement& operator-=(const WeylElement& o);
    friend WeylElement operator+(WeylElement a, const WeylElement& b) { return a += b; }
    friend WeylElement operator-(WeylElement a, const WeylElement& b) { return a -= b; }
    friend WeylElement operator*(const WeylElement& a, const WeylElement& b);

    WeylElement scaled(const CRational& c) const;

    WeylElement d_x(int i) const;  // d/dx^i, 1-based
    WeylElement d_y(int i) const;  // d/dy^i

    WeylElement shift_h(int dk) const;  // multiply by h^dk, dk >= 0
    // Exact division by h^dk; throws NonDivisible if some term has k < dk.
    WeylElement div_h(int dk) const;

    // Left wedge dx^i /\ (.) and left contraction along dx^i.
    WeylElement wedge_dx(int i) const;
    WeylElement contract_dx(int i) const;

    // Largest dx-degree present (0 for zero element).
    int top_dx_degree() const;
    // True when every term has the same dx-degree q.
    bool is_dx_homogeneous(int q) const;

    // Restriction to y = 0, dx-degree 0, as an h-series in x.
    HSeries scalar_part() const;

    friend bool operator==(const WeylElement& a, const WeylElement& b) {
        return a.terms == b.terms;
    }

    // Canonical "coeff h^k x^(..) y^(..) dx{S}" terms joined by " + ".
    std::string str(int dim) const;
};

WeylElement reduce(const WeylElement& a, const TruncationProfile& p);

// Minimal value of 2k + |y-index| + |dx-subset| over the terms of a.
// Throws ZeroElement when a is zero; infinity is reported via the error,
// never as a number.
int filtration_degree(const WeylElement& a);

// Inverse for dx-degree-0 elements with invertible constant term, mod the
// profile ideal.  Throws NonInvertible otherwise.
WeylElement series_invert(const WeylElement& s, const TruncationProfile& p);

// Parses the canonical term grammar back into an element; dim fixes the
// multi-index width.  Accepts omitted factors (missing h^, x^, y^, dx parts
// default to trivial) and a standalone "+" between terms.
WeylElement parse_weyl(const std::string& text, int dim);

}  // namespace starforge
