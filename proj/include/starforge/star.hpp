#pragma once

#include <array>
#include <string>
#include <vector>

#include "starforge/formal_ode.hpp"
#include "starforge/hochschild.hpp"
#include "starforge/hseries.hpp"
#include "starforge/polyvector.hpp"
#include "starforge/profile.hpp"

namespace starforge {

// Formal series of constant antisymmetric d x d matrices, pi = h pi_1 + ....
// The entry at (i, j) is the coefficient of d_i (x) d_j in the first-order
// part of the product exponent.
struct ConstPoissonMatrix {
    int dim = 0;
    std::vector<HSeries> entries;  // row-major

    ConstPoissonMatrix(int d, std::vector<HSeries> e);

    const HSeries& at(int i, int j) const { return entries[i * dim + j]; }

    // Coefficient matrix of h^k.
    std::vector<CRational> order(int k) const;
};

// h J, or any constant multiple: pairs (2m, 2m+1) with scale above the
// diagonal.  Throws on odd dimension.
ConstPoissonMatrix symplectic_matrix(int dim, const HSeries& scale);

// f * g = f g + bidiff(f, g) with bidiff of order >= 1 in h, killing
// constants in both slots so the unit law is automatic.  The trilinear
// defect operator (coboundary plus half-bracket of the correction) is
// precomputed; its evaluation is minus the associator.
struct StarProduct {
    PolyDiffOp bidiff{2};
    PolyDiffOp defect{3};

    explicit StarProduct(PolyDiffOp b);
};

// Exact product application, no truncation.
HSeries star_apply(const StarProduct& s, const HSeries& f, const HSeries& g);

// Arity-1 operator id + h T_1 + h^2 T_2 + ... fixing 1.
struct Equivalence {
    PolyDiffOp op{1};

    explicit Equivalence(PolyDiffOp o);
    static Equivalence identity();

    // Neumann series of the induced map on the truncated algebra,
    // re-interpolated as an operator; inverts reduce-after-apply chains
    // in both orders.
    Equivalence inverse(const TruncationProfile& pr) const;
};

HSeries equiv_apply(const Equivalence& t, const HSeries& f,
                    const TruncationProfile& pr);

// mu_0 . exp(Pi^{ij} d_i (x) d_j), truncated; no extra 1/2 in the exponent,
// so [x^i, x^j] = 2 Pi^{ij}.
StarProduct moyal(const ConstPoissonMatrix& pi, const TruncationProfile& pr);

// (f*g)*h - f*(g*h), reduced.  Internally cross-checked against the
// evaluation of the coboundary-plus-half-bracket of the correction term.
HSeries assoc_residual(const StarProduct& s, const HSeries& f, const HSeries& g,
                       const HSeries& h, const TruncationProfile& pr);

// f *' g = T^{-1}(T f * T g), re-interpolated as a bidifferential operator
// from its values on monomial pairs of degree <= pr.x_degree.
StarProduct conjugate(const Equivalence& t, const StarProduct& s,
                      const TruncationProfile& pr);

// Staged equivalence ...P_4 P_3 P_2 with P(a *_pi b) = P(a) *_{h pi_1} P(b):
// stage m scales by exp(h^{m-1} chi_m x d_x) with chi_m = pi_m pi_1^{-1} / 2,
// removing the h^m matrix coefficient.
Equivalence moyal_normalizer(const ConstPoissonMatrix& pi,
                             const TruncationProfile& pr);

struct BFieldFlow {
    Equivalence transform;      // T at t = 1
    ConstPoissonMatrix target;  // matrix of the flowed structure at t = 1
    StarProduct endpoint;       // its product
    HSeries worst_residual;     // max-degree witness of T(f *_1 g) - Tf * Tg
    bool intertwines = false;
};

// Flow along a constant 2-form B: the matrix moves by pi(1 - t B pi)^{-1}
// with B_m the matrix of B = sum_{i<j} B_{ij} dx^i dx^j and contraction
// (i_X B)_j = B_{ij} X^i; the transport solves dT/dt = T . V^t with
// V^t = -a(tB, pi) applied to the primitive theta = sum_{i<j} B_{ij} x^i dx^j.
// The result carries the residual sweep over monomial pairs.
BFieldFlow bfield_equivalence(const ConstPoissonMatrix& pi, const DiffForm& b,
                              const TruncationProfile& pr);

// Exp_*(t d) together with its two-sided product inverse.
ProductExpPair star_exponential(const HSeries& d, const StarProduct& s,
                                const TruncationProfile& pr);

// Cocycle data on a three-set cover: scalar exponents c_{12}, c_{23}, c_{31},
// each split into an exact part (HSeries, constant in x) plus a declared
// rational multiple of the symbol 2*pi*i.  The symbolic part never enters
// series arithmetic; it is tracked so e^{2 pi i n} = 1 applies as a rewrite.
struct TransitionReport {
    bool units_ok = false;      // G_{aa} = 1
    bool inverses_ok = false;   // G_{ab} * G_{ba} = 1
    bool tails_ok = false;      // triple tail equals the exponential of the sum
    HSeries exponent_sum;       // c_{12} + c_{23} + c_{31}
    CRational symbol_sum;       // the 2*pi*i multiples added up
    long declared_n = 0;
    bool cocycle_closes = false;
    std::string triple_at_one;  // "1" after the rewrite, else the exponential
    std::array<std::string, 3> classical_parts;
};

TransitionReport transition_demo(const StarProduct& s,
                                 const std::array<HSeries, 3>& c,
                                 const std::array<CRational, 3>& symbol_mult,
                                 long n, const TruncationProfile& pr);

}  // namespace starforge
