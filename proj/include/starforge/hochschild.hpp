#pragma once

#include <map>
#include <string>
#include <vector>

#include "starforge/hseries.hpp"
#include "starforge/multiindex.hpp"
#include "starforge/profile.hpp"

namespace starforge {

// Polydifferential operator of fixed arity: a sum of terms
// c(x,h) (d^{b1} arg1) ... (d^{bk} argk), keyed by the slot multi-indices.
// Arity 0 is a plain element, keyed by the empty tuple.  The raw type admits
// non-differentiating slots (the identity operator needs one); the cochain
// operations below land in the normalized quotient, where such terms are
// projected away.
struct PolyDiffOp {
    int arity = 0;
    std::map<std::vector<MIdx>, HSeries> terms;

    PolyDiffOp() = default;
    explicit PolyDiffOp(int k) : arity(k) {}

    static PolyDiffOp element(const HSeries& f);
    // c * d^{b1} (x) ... (x) d^{bk}
    static PolyDiffOp tensor(const std::vector<MIdx>& slots, const HSeries& c);
    // the arity-1 operator d/dx^i
    static PolyDiffOp partial(int i);
    static PolyDiffOp identity_op();  // arity 1, id

    bool is_zero() const { return terms.empty(); }

    void add_term(const std::vector<MIdx>& slots, const HSeries& c);

    PolyDiffOp operator-() const;
    PolyDiffOp& operator+=(const PolyDiffOp& o);
    PolyDiffOp& operator-=(const PolyDiffOp& o);
    friend PolyDiffOp operator+(PolyDiffOp a, const PolyDiffOp& b) { return a += b; }
    friend PolyDiffOp operator-(PolyDiffOp a, const PolyDiffOp& b) { return a -= b; }

    PolyDiffOp scaled(const CRational& c) const;
    PolyDiffOp shifted(int dk) const;  // multiply coefficients by h^dk

    // Smallest h-power occurring in any coefficient; kInfiniteDegree for 0.
    int h_filtration() const;

    // Projection to the normalized quotient: for arity >= 1, drops every
    // term with a derivative-free slot, so the result kills the constant 1
    // in each argument.
    PolyDiffOp normalize() const;
    bool is_normalized() const;

    friend bool operator==(const PolyDiffOp& a, const PolyDiffOp& b) {
        return a.arity == b.arity && a.terms == b.terms;
    }

    // "[<coefficient series>] D(b1)(b2)..(bk)" records joined by " + ".
    std::string str(int dim) const;
};

// Iterated partial derivative d^{beta} f.
HSeries deriv(const HSeries& f, const MIdx& beta);

HSeries apply(const PolyDiffOp& p, const std::vector<HSeries>& args);

// Associative product presented as pointwise multiplication plus a
// normalized bidifferential correction (zero correction = plain product).
struct Product {
    PolyDiffOp correction{2};

    static Product pointwise() { return Product{}; }
    static Product with_correction(PolyDiffOp pi);
};

HSeries apply_product(const Product& prod, const HSeries& a, const HSeries& b);

// Operadic insertion: the output of q feeds slot i (0-based) of p while the
// derivatives p carries on that slot distribute by the Leibniz rule.
PolyDiffOp insert_at(const PolyDiffOp& p, int slot, const PolyDiffOp& q);

// Hochschild coboundary relative to prod: the alternating sum of outer
// multiplications and neighbor merges; arity k -> k+1.  For arity 0 this is
// a0 P - P a0 (zero for commutative prod corrections applied to elements).
PolyDiffOp hoch_coboundary(const PolyDiffOp& p, const Product& prod);

// Gerstenhaber bracket in the convention where the insertion sum carries
// (-1)^{(i+k1) k2} with k = arity - 1 and the flip carries -(-1)^{k1 k2}.
// With this normalization hoch_coboundary(P, m) = [m, P] exactly.
PolyDiffOp gerstenhaber(const PolyDiffOp& q1, const PolyDiffOp& q2);

// [mu + correction, P] where mu is bare multiplication; equals the
// Hochschild coboundary of P relative to that product.
PolyDiffOp gerstenhaber_with_product(const Product& prod, const PolyDiffOp& p);

PolyDiffOp reduce(const PolyDiffOp& p, const TruncationProfile& profile);

}  // namespace starforge
