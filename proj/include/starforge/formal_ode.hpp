#pragma once

#include <functional>
#include <map>
#include <string>
#include <utility>

#include "starforge/errors.hpp"
#include "starforge/hochschild.hpp"
#include "starforge/hseries.hpp"
#include "starforge/profile.hpp"

namespace starforge {

// Polynomial in the flow parameter t with values in a carrier that tracks
// its own h-grading (HSeries, PolyDiffOp, PolyVectorField).  Integration and
// differentiation act on the t direction only.
template <class V>
struct TPoly {
    std::map<int, V> coef;  // t-power -> value, no zero entries

    TPoly() = default;

    static TPoly constant(const V& v) {
        TPoly p;
        if (!v.is_zero()) p.coef.emplace(0, v);
        return p;
    }

    bool is_zero() const { return coef.empty(); }

    void add_term(int k, const V& v) {
        if (v.is_zero()) return;
        auto it = coef.find(k);
        if (it == coef.end()) {
            coef.emplace(k, v);
            return;
        }
        it->second += v;
        if (it->second.is_zero()) coef.erase(it);
    }

    TPoly& operator+=(const TPoly& o) {
        for (const auto& [k, v] : o.coef) add_term(k, v);
        return *this;
    }
    friend TPoly operator+(TPoly a, const TPoly& b) { return a += b; }

    TPoly scaled(const CRational& c) const {
        TPoly out;
        if (c.is_zero()) return out;
        for (const auto& [k, v] : coef) out.add_term(k, v.scaled(c));
        return out;
    }

    TPoly operator-() const { return scaled(CRational(-1)); }
    TPoly& operator-=(const TPoly& o) { return *this += -o; }
    friend TPoly operator-(TPoly a, const TPoly& b) { return a -= b; }

    // formal d/dt
    TPoly dt() const {
        TPoly out;
        for (const auto& [k, v] : coef)
            if (k > 0) out.add_term(k - 1, v.scaled(CRational(k)));
        return out;
    }

    // definite integral from 0, t^k -> t^{k+1}/(k+1)
    TPoly integrate() const {
        TPoly out;
        for (const auto& [k, v] : coef)
            out.add_term(k + 1, v.scaled(CRational(1, k + 1)));
        return out;
    }

    // exact substitution of a rational flow time
    V at(const CRational& t) const {
        V out{};
        for (const auto& [k, v] : coef) {
            CRational p = CRational::one();
            for (int e = 0; e < k; ++e) p = p * t;
            out += v.scaled(p);
        }
        return out;
    }

    int h_filtration() const {
        int f = kInfiniteDegree;
        for (const auto& [k, v] : coef) f = std::min(f, v.h_filtration());
        return f;
    }

    friend bool operator==(const TPoly& a, const TPoly& b) {
        return a.coef == b.coef;
    }

    std::string str(int dim) const {
        if (coef.empty()) return "0";
        std::string out;
        for (const auto& [k, v] : coef) {
            if (!out.empty()) out += " + ";
            out += "t^" + std::to_string(k) + " (" + v.str(dim) + ")";
        }
        return out;
    }
};

template <class V>
TPoly<V> reduce(const TPoly<V>& a, const TruncationProfile& p) {
    TPoly<V> out;
    for (const auto& [k, v] : a.coef) out.add_term(k, reduce(v, p));
    return out;
}

// t-polynomial product of an operator series against a value series, the
// action supplied as a callable
template <class V, class Op, class Act>
TPoly<V> apply_tpoly(const TPoly<Op>& D, const TPoly<V>& v, Act&& act) {
    TPoly<V> out;
    for (const auto& [i, d] : D.coef)
        for (const auto& [j, x] : v.coef) out.add_term(i + j, act(d, x));
    return out;
}

// Unique solution of dv/dt = w(t) + D(t) v(t), v(0) = v0, by fixed-point
// iteration of v -> v0 + int_0^t (w + D v); both w and D must start at h^1
// so each pass settles one more h-order.
template <class V, class Op, class Act>
TPoly<V> solve_linear(const TPoly<V>& w, const TPoly<Op>& D, const V& v0,
                      Act&& act, const TruncationProfile& pr) {
    if (!w.is_zero() && w.h_filtration() < 1)
        throw ZerothOrderViolation("source term carries an h^0 part");
    if (!D.is_zero() && D.h_filtration() < 1)
        throw ZerothOrderViolation("operator term carries an h^0 part");

    TPoly<V> base = TPoly<V>::constant(v0);
    TPoly<V> wcut = reduce(w, pr);
    TPoly<V> v = reduce(base, pr);
    for (int pass = 0; pass <= pr.hbar_order + 1; ++pass) {
        TPoly<V> rhs = wcut;
        rhs += apply_tpoly(D, v, act);
        TPoly<V> next = base;
        next += rhs.integrate();
        next = reduce(next, pr);
        if (next == v) return v;
        v = next;
    }
    throw NoConvergence("fixed-point iteration did not stabilize in the h window");
}

// Solution data for flows with a scalar exponential prefactor: the full
// solution reads e^{t rate} h0 tail(t), kept factored so coefficients stay
// rational at rational times.
struct ExpSolution {
    CRational rate;
    HSeries h0;
    TPoly<HSeries> tail;
};

// Unique solution of df/dt = (rate + D(t)) f, f(0) = h, with h invertible
// and D starting at h^1.  The scalar rate keeps the conjugated equation
// polynomial; the tail solves d(tail)/dt = h0^{-1} D(t) (h0 tail).
ExpSolution solve_exp_prefactor(const CRational& rate,
                                const TPoly<PolyDiffOp>& D, const HSeries& h,
                                const TruncationProfile& pr);

// Product exponential and its product inverse: f(t) = e^{t rate} f_tail
// solves df/dt = d * f with f(0) = 1 for the supplied bilinear product, and
// e^{-t rate} inv_tail solves the reversed-order equation du/dt = -u * d.
struct ProductExpPair {
    CRational rate;
    TPoly<HSeries> f;
    TPoly<HSeries> inv;
};

using BilinearProduct =
    std::function<HSeries(const HSeries&, const HSeries&)>;

ProductExpPair product_exponential(const HSeries& d, const BilinearProduct& mult,
                                   const TruncationProfile& pr);

}  // namespace starforge
