#include "starforge/hseries.hpp"

#include <string>

#include "starforge/errors.hpp"

namespace starforge {

HSeries HSeries::one() { return constant(CRational::one()); }

HSeries HSeries::constant(const CRational& c) {
    HSeries s;
    if (!c.is_zero()) s.coeffs[0] = TruncPoly::constant(c);
    return s;
}

HSeries HSeries::from_poly(const TruncPoly& p, int hpow) {
    HSeries s;
    if (!p.is_zero()) s.coeffs[hpow] = p;
    return s;
}

const TruncPoly& HSeries::coeff(int k) const {
    static const TruncPoly kZero;
    auto it = coeffs.find(k);
    return it == coeffs.end() ? kZero : it->second;
}

void HSeries::add_term(int k, const TruncPoly& p) {
    if (p.is_zero()) return;
    auto [it, fresh] = coeffs.emplace(k, p);
    if (!fresh) {
        it->second += p;
        if (it->second.is_zero()) coeffs.erase(it);
    }
}

HSeries HSeries::operator-() const {
    HSeries s;
    for (const auto& [k, p] : coeffs) s.coeffs[k] = -p;
    return s;
}

HSeries& HSeries::operator+=(const HSeries& o) {
    for (const auto& [k, p] : o.coeffs) add_term(k, p);
    return *this;
}

HSeries& HSeries::operator-=(const HSeries& o) {
    for (const auto& [k, p] : o.coeffs) add_term(k, -p);
    return *this;
}

HSeries operator*(const HSeries& a, const HSeries& b) {
    HSeries s;
    for (const auto& [ka, pa] : a.coeffs)
        for (const auto& [kb, pb] : b.coeffs) s.add_term(ka + kb, pa * pb);
    return s;
}

HSeries HSeries::scaled(const CRational& c) const {
    HSeries s;
    if (c.is_zero()) return s;
    for (const auto& [k, p] : coeffs) {
        TruncPoly q = p.scaled(c);
        if (!q.is_zero()) s.coeffs[k] = q;
    }
    return s;
}

HSeries HSeries::shifted(int dk) const {
    HSeries s;
    for (const auto& [k, p] : coeffs) s.coeffs[k + dk] = p;
    return s;
}

HSeries HSeries::dx(int i) const {
    HSeries s;
    for (const auto& [k, p] : coeffs) {
        TruncPoly q = p.dx(i);
        if (!q.is_zero()) s.coeffs[k] = q;
    }
    return s;
}

std::string HSeries::str(int dim) const {
    if (coeffs.empty()) return "0";
    std::string s;
    for (const auto& [k, p] : coeffs)
        for (const auto& [m, c] : p.terms) {
            if (!s.empty()) s += " + ";
            s += c.str() + " h^" + std::to_string(k) + " x^" + m.str(dim);
        }
    return s;
}

HSeries reduce(const HSeries& a, const TruncationProfile& p) {
    HSeries s;
    for (const auto& [k, q] : a.coeffs) {
        if (k > p.hbar_order) continue;
        TruncPoly r = reduce(q, p);
        if (!r.is_zero()) s.coeffs[k] = r;
    }
    return s;
}

HSeries series_invert(const HSeries& s, const TruncationProfile& p) {
    HSeries a = reduce(s, p);
    CRational c0 = a.coeff(0).constant_term();
    if (c0.is_zero()) throw NonInvertible("series has no constant term");
    // a = c0 (1 - u) with every term of u of combined (h,x) order >= 1, so
    // the Neumann sum ends after hbar_order + x_degree steps.
    HSeries u = HSeries::one() - a.scaled(c0.inverse());
    HSeries inv = HSeries::one();
    HSeries pow = u;
    int bound = p.hbar_order + p.x_degree;
    for (int m = 1; m <= bound && !pow.is_zero(); ++m) {
        inv += pow;
        pow = reduce(pow * u, p);
    }
    return reduce(inv.scaled(c0.inverse()), p);
}

}  // namespace starforge
