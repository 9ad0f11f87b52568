#include "starforge/trunc_poly.hpp"

#include <string>

namespace starforge {

TruncPoly TruncPoly::constant(const CRational& c) {
    TruncPoly p;
    if (!c.is_zero()) p.terms[MIdx{}] = c;
    return p;
}

TruncPoly TruncPoly::variable(int i) {
    TruncPoly p;
    p.terms[MIdx::unit(i - 1)] = CRational::one();
    return p;
}

TruncPoly TruncPoly::monomial(const MIdx& m, const CRational& c) {
    TruncPoly p;
    if (!c.is_zero()) p.terms[m] = c;
    return p;
}

int TruncPoly::degree() const {
    if (terms.empty()) return kInfiniteDegree;
    int d = 0;
    for (const auto& [m, c] : terms)
        if (m.degree() > d) d = m.degree();
    return d;
}

const CRational& TruncPoly::coeff(const MIdx& m) const {
    static const CRational kZero;
    auto it = terms.find(m);
    return it == terms.end() ? kZero : it->second;
}

void TruncPoly::add_term(const MIdx& m, const CRational& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = terms.emplace(m, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) terms.erase(it);
    }
}

TruncPoly TruncPoly::operator-() const {
    TruncPoly p;
    for (const auto& [m, c] : terms) p.terms[m] = -c;
    return p;
}

TruncPoly& TruncPoly::operator+=(const TruncPoly& o) {
    for (const auto& [m, c] : o.terms) add_term(m, c);
    return *this;
}

TruncPoly& TruncPoly::operator-=(const TruncPoly& o) {
    for (const auto& [m, c] : o.terms) add_term(m, -c);
    return *this;
}

TruncPoly operator*(const TruncPoly& a, const TruncPoly& b) {
    TruncPoly p;
    for (const auto& [ma, ca] : a.terms)
        for (const auto& [mb, cb] : b.terms) p.add_term(ma + mb, ca * cb);
    return p;
}

TruncPoly TruncPoly::scaled(const CRational& c) const {
    TruncPoly p;
    if (c.is_zero()) return p;
    for (const auto& [m, v] : terms) {
        CRational w = v * c;
        if (!w.is_zero()) p.terms[m] = w;
    }
    return p;
}

TruncPoly TruncPoly::dx(int i) const {
    TruncPoly p;
    int j = i - 1;
    for (const auto& [m, c] : terms) {
        if (m[j] == 0) continue;
        p.add_term(m.lowered(j), c * CRational(m[j]));
    }
    return p;
}

std::string TruncPoly::str(int dim) const {
    if (terms.empty()) return "0";
    std::string s;
    for (const auto& [m, c] : terms) {
        if (!s.empty()) s += " + ";
        s += c.str() + " x^" + m.str(dim);
    }
    return s;
}

TruncPoly reduce(const TruncPoly& a, const TruncationProfile& p) {
    TruncPoly r;
    for (const auto& [m, c] : a.terms)
        if (m.degree() <= p.x_degree) r.terms[m] = c;
    return r;
}

}  // namespace starforge
