#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "starforge/hseries.hpp"
#include "starforge/multiindex.hpp"
#include "starforge/profile.hpp"

namespace starforge {

// Antisymmetric multivector field: components on sorted k-subsets of the
// coordinate directions, each an HSeries.  Arity 0 is a plain function,
// arity 1 a vector field.  Zero of any arity is the empty map.
struct PolyVectorField {
    int arity = 0;
    std::map<std::uint16_t, HSeries> comp;

    PolyVectorField() = default;
    explicit PolyVectorField(int k) : arity(k) {}

    static PolyVectorField function(const HSeries& f);
    static PolyVectorField basis(int i);                     // d/dx^i
    static PolyVectorField wedge_basis(int i, int j);        // d/dx^i /\ d/dx^j
    static PolyVectorField monomial(int k, std::uint16_t mask, const HSeries& c);

    bool is_zero() const { return comp.empty(); }

    // Lowest h-power across all components; kInfiniteDegree for 0.
    int h_filtration() const {
        int f = kInfiniteDegree;
        for (const auto& [s, c] : comp) f = std::min(f, c.h_filtration());
        return f;
    }

    const HSeries& component(std::uint16_t mask) const;
    void add_component(std::uint16_t mask, const HSeries& c);

    PolyVectorField operator-() const;
    PolyVectorField& operator+=(const PolyVectorField& o);
    PolyVectorField& operator-=(const PolyVectorField& o);
    friend PolyVectorField operator+(PolyVectorField a, const PolyVectorField& b) {
        return a += b;
    }
    friend PolyVectorField operator-(PolyVectorField a, const PolyVectorField& b) {
        return a -= b;
    }

    PolyVectorField scaled(const CRational& c) const;
    PolyVectorField shifted(int dk) const;  // multiply by h^dk

    friend bool operator==(const PolyVectorField& a, const PolyVectorField& b) {
        return a.arity == b.arity && a.comp == b.comp;
    }

    std::string str(int dim) const;
};

// Differential form with the same storage scheme; degree-q components on
// sorted q-subsets.
struct DiffForm {
    int degree = 0;
    std::map<std::uint16_t, HSeries> comp;

    DiffForm() = default;
    explicit DiffForm(int q) : degree(q) {}

    static DiffForm function(const HSeries& f);
    static DiffForm basis(int i);  // dx^i
    static DiffForm monomial(int q, std::uint16_t mask, const HSeries& c);

    bool is_zero() const { return comp.empty(); }

    const HSeries& component(std::uint16_t mask) const;
    void add_component(std::uint16_t mask, const HSeries& c);

    DiffForm operator-() const;
    DiffForm& operator+=(const DiffForm& o);
    DiffForm& operator-=(const DiffForm& o);
    friend DiffForm operator+(DiffForm a, const DiffForm& b) { return a += b; }
    friend DiffForm operator-(DiffForm a, const DiffForm& b) { return a -= b; }

    DiffForm scaled(const CRational& c) const;
    DiffForm shifted(int dk) const;

    friend bool operator==(const DiffForm& a, const DiffForm& b) {
        return a.degree == b.degree && a.comp == b.comp;
    }

    std::string str(int dim) const;
};

// Section of TM + T*M: a vector field paired with a 1-form.
struct GenSection {
    PolyVectorField vec{1};
    DiffForm form{1};

    GenSection() = default;
    GenSection(PolyVectorField v, DiffForm f) : vec(std::move(v)), form(std::move(f)) {}

    friend bool operator==(const GenSection& a, const GenSection& b) {
        return a.vec == b.vec && a.form == b.form;
    }
};

// Wedge products.
PolyVectorField wedge(const PolyVectorField& a, const PolyVectorField& b, int dim);
DiffForm wedge(const DiffForm& a, const DiffForm& b, int dim);

// Schouten-Nijenhuis bracket, arity k1 + k2 - 1.  Arities beyond dim give
// the zero polyvector.  Normalized so that [pi, f] = -pi_sharp(df) and
// [pi, X] = -Lie_X pi.
PolyVectorField schouten(const PolyVectorField& g1, const PolyVectorField& g2, int dim);

// Anchor map of a bivector: 1-forms by contraction into the first slot,
// higher degrees as an algebra morphism, degree 0 identically.
PolyVectorField pi_sharp(const PolyVectorField& pi, const DiffForm& eta, int dim);

// Poisson bracket {f,g} = pi(df, dg) of two functions.
HSeries poisson_bracket(const PolyVectorField& pi, const HSeries& f, const HSeries& g,
                        int dim);

// Cyclic sum {f,{g,h}} + {g,{h,f}} + {h,{f,g}}.
HSeries jacobiator(const PolyVectorField& pi, const HSeries& f, const HSeries& g,
                   const HSeries& h, int dim);

// Value of a k-vector on k exact or general 1-forms (determinant expansion).
HSeries evaluate(const PolyVectorField& gamma, const std::vector<DiffForm>& forms,
                 int dim);

// Exterior derivative.
DiffForm de_rham(const DiffForm& eta, int dim);

// Interior products (contraction into the first slot, alternating signs).
DiffForm contract(const PolyVectorField& x, const DiffForm& eta, int dim);

// Cartan formula Lie_X = i_X d + d i_X.
DiffForm lie_derivative(const PolyVectorField& x, const DiffForm& eta, int dim);

// <(X,xi),(Y,eta)> = eta(X) + xi(Y).
HSeries pairing(const GenSection& e1, const GenSection& e2, int dim);

// Courant bracket ([X,Y], Lie_X eta - i_Y d xi).
GenSection courant(const GenSection& e1, const GenSection& e2, int dim);

// lambda_B(X, xi) = (X, xi + i_X B).
GenSection b_transform(const DiffForm& b, const GenSection& e, int dim);

// Differential of a function as a 1-form.
DiffForm d_function(const HSeries& f, int dim);

PolyVectorField reduce(const PolyVectorField& a, const TruncationProfile& p);
DiffForm reduce(const DiffForm& a, const TruncationProfile& p);

}  // namespace starforge
