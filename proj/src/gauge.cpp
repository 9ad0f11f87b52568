#include "starforge/gauge.hpp"

#include <map>
#include <vector>

#include "starforge/errors.hpp"

namespace starforge {

namespace {

std::uint16_t bit(int i) { return static_cast<std::uint16_t>(1u << (i - 1)); }

void check_gauge_input(const DiffForm& b, const PolyVectorField& pi,
                       const TruncationProfile& pr) {
    if (b.degree != 2) throw ArityMismatch("gauge form must have degree 2");
    if (pi.arity != 2) throw ArityMismatch("gauge acts on bivectors");
    if (pi.h_filtration() < 1)
        throw ZerothOrderViolation("gauge input bivector has an h^0 term");
    if (!reduce(de_rham(b, pr.dim), pr).is_zero())
        throw NotClosed("gauge form is not closed within the profile");
}

// Columns T(dx^i) of the transformed anchor.  Each correction step raises the
// h-filtration, so the sum closes within the profile.
std::vector<PolyVectorField> anchor_columns(const DiffForm& b, const PolyVectorField& pi,
                                            const TruncationProfile& pr) {
    std::vector<PolyVectorField> cols;
    cols.reserve(pr.dim);
    for (int i = 1; i <= pr.dim; ++i) {
        DiffForm cur = DiffForm::basis(i);
        DiffForm acc = cur;
        int guard = pr.hbar_order + 2;
        while (!cur.is_zero()) {
            if (--guard < 0) throw EngineError("gauge correction series did not close");
            cur = reduce(-contract(pi_sharp(pi, cur, pr.dim), b, pr.dim), pr);
            acc += cur;
        }
        cols.push_back(reduce(pi_sharp(pi, acc, pr.dim), pr));
    }
    return cols;
}

// Right-hand side p(t)^sharp(B) of the flow, expanded t-degree by t-degree
// through polarization of the quadratic anchor extension.
TPoly<PolyVectorField> sharp_rhs(const TPoly<PolyVectorField>& pt, const DiffForm& b,
                                 const TruncationProfile& pr) {
    std::map<int, PolyVectorField> diag;
    for (const auto& [k, v] : pt.coef)
        diag.emplace(k, reduce(pi_sharp(v, b, pr.dim), pr));
    TPoly<PolyVectorField> out;
    for (const auto& [k, u] : pt.coef) {
        out.add_term(2 * k, diag.at(k));
        for (const auto& [l, v] : pt.coef) {
            if (l <= k) continue;
            PolyVectorField mixed = reduce(pi_sharp(u + v, b, pr.dim), pr);
            mixed -= diag.at(k);
            mixed -= diag.at(l);
            out.add_term(k + l, mixed);
        }
    }
    return out;
}

using RMat = std::vector<std::vector<CRational>>;
using HMat = std::vector<std::vector<HSeries>>;

RMat rmat_inverse(RMat m) {
    int d = static_cast<int>(m.size());
    RMat inv(d, std::vector<CRational>(d));
    for (int i = 0; i < d; ++i) inv[i][i] = CRational::one();
    for (int c = 0; c < d; ++c) {
        int p = c;
        while (p < d && m[p][c].is_zero()) ++p;
        if (p == d) throw DegeneratePi1("leading coefficient matrix is singular at the origin");
        std::swap(m[p], m[c]);
        std::swap(inv[p], inv[c]);
        CRational s = m[c][c].inverse();
        for (int j = 0; j < d; ++j) {
            m[c][j] = m[c][j] * s;
            inv[c][j] = inv[c][j] * s;
        }
        for (int r = 0; r < d; ++r) {
            if (r == c || m[r][c].is_zero()) continue;
            CRational f = m[r][c];
            for (int j = 0; j < d; ++j) {
                m[r][j] = m[r][j] - f * m[c][j];
                inv[r][j] = inv[r][j] - f * inv[c][j];
            }
        }
    }
    return inv;
}

HMat hmat_mul(const HMat& a, const HMat& b, const TruncationProfile& pr) {
    int d = static_cast<int>(a.size());
    HMat out(d, std::vector<HSeries>(d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            HSeries s;
            for (int k = 0; k < d; ++k) s += a[i][k] * b[k][j];
            out[i][j] = reduce(s, pr);
        }
    return out;
}

bool hmat_is_zero(const HMat& m) {
    for (const auto& row : m)
        for (const auto& e : row)
            if (!e.is_zero()) return false;
    return true;
}

// Inverse of an HSeries matrix whose constant (h^0, x^0) part is invertible:
// the tail beyond that part gains combined h-plus-x degree with every power.
HMat hmat_inverse(const HMat& m, const TruncationProfile& pr) {
    int d = static_cast<int>(m.size());
    RMat c(d, std::vector<CRational>(d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) c[i][j] = m[i][j].coeff(0).constant_term();
    RMat cinv = rmat_inverse(c);
    HMat x(d, std::vector<HSeries>(d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (!cinv[i][j].is_zero()) x[i][j] = HSeries::constant(cinv[i][j]);
    HMat t = hmat_mul(x, m, pr);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            t[i][j] = -t[i][j];
            if (i == j) t[i][j] += HSeries::one();
        }
    HMat acc = x;
    HMat term = x;
    int guard = pr.hbar_order + pr.x_degree + 2;
    while (!hmat_is_zero(term)) {
        if (--guard < 0) throw EngineError("matrix inverse series did not close");
        term = hmat_mul(t, term, pr);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) acc[i][j] += term[i][j];
    }
    return acc;
}

template <class T>
HMat matrix_of(const T& a, int dim) {
    HMat m(dim, std::vector<HSeries>(dim));
    for (const auto& [s, c] : a.comp) {
        int i = __builtin_ctz(s) + 1;
        int j = __builtin_ctz(static_cast<std::uint16_t>(s & (s - 1))) + 1;
        m[i - 1][j - 1] = c;
        m[j - 1][i - 1] = -c;
    }
    return m;
}

HSeries downshift(const HSeries& s) {
    HSeries out;
    for (const auto& [k, p] : s.coeffs) out.add_term(k - 1, p);
    return out;
}

}  // namespace

PolyVectorField gauge_transform(const DiffForm& b_in, const PolyVectorField& pi_in,
                                const TruncationProfile& pr) {
    DiffForm b = reduce(b_in, pr);
    PolyVectorField pi = reduce(pi_in, pr);
    check_gauge_input(b, pi, pr);
    std::vector<PolyVectorField> cols = anchor_columns(b, pi, pr);
    PolyVectorField out(2);
    for (int i = 1; i <= pr.dim; ++i)
        for (int j = i + 1; j <= pr.dim; ++j) {
            HSeries upper = cols[i - 1].component(bit(j));
            if (!(upper + cols[j - 1].component(bit(i))).is_zero())
                throw NotAntisymmetric("transformed anchor matrix lost skewness");
            if (!upper.is_zero())
                out.add_component(static_cast<std::uint16_t>(bit(i) | bit(j)), upper);
        }
    return out;
}

TPoly<PolyVectorField> gauge_flow(const DiffForm& b_in, const PolyVectorField& pi_in,
                                  const TruncationProfile& pr) {
    DiffForm b = reduce(b_in, pr);
    PolyVectorField pi = reduce(pi_in, pr);
    check_gauge_input(b, pi, pr);
    TPoly<PolyVectorField> pt = TPoly<PolyVectorField>::constant(pi);
    for (int it = 0; it <= pr.hbar_order + 1; ++it) {
        TPoly<PolyVectorField> next = TPoly<PolyVectorField>::constant(pi);
        next += reduce(sharp_rhs(pt, b, pr).integrate(), pr);
        if (next == pt) return pt;
        pt = next;
    }
    throw NoConvergence("gauge flow iteration did not stabilize");
}

PolyVectorField gauge_transform_ode(const DiffForm& b, const PolyVectorField& pi,
                                    const TruncationProfile& pr) {
    PolyVectorField out(2);
    for (const auto& [k, v] : gauge_flow(b, pi, pr).coef) out += v;
    return out;
}

ExactFlowReport exact_equivalence_residual(const DiffForm& theta,
                                           const PolyVectorField& pi_in,
                                           const TruncationProfile& pr) {
    if (theta.degree != 1) throw ArityMismatch("flow potential must be a 1-form");
    PolyVectorField pi = reduce(pi_in, pr);
    DiffForm b = reduce(de_rham(theta, pr.dim), pr);
    ExactFlowReport rep;
    rep.poisson_input = reduce(schouten(pi, pi, pr.dim), pr).is_zero();
    TPoly<PolyVectorField> pt = gauge_flow(b, pi, pr);
    TPoly<PolyVectorField> xt;
    for (const auto& [k, v] : pt.coef)
        xt.add_term(k, reduce(-pi_sharp(v, theta, pr.dim), pr));
    TPoly<PolyVectorField> rhs;
    for (const auto& [k, v] : pt.coef)
        for (const auto& [l, x] : xt.coef)
            rhs.add_term(k + l, reduce(schouten(v, x, pr.dim), pr));
    rep.residual = reduce(pt.dt() - rhs, pr);
    return rep;
}

DiffForm ShiftedTwoForm::component(int j) const {
    DiffForm out(2);
    for (const auto& [s, c] : times_h.comp) {
        const TruncPoly& p = c.coeff(j + 1);
        if (!p.is_zero()) out.add_component(s, HSeries::from_poly(p, 0));
    }
    return out;
}

ShiftedTwoForm omega_from_pi(const PolyVectorField& pi_in, const TruncationProfile& pr) {
    if (pi_in.arity != 2) throw ArityMismatch("2-form dictionary needs a bivector");
    PolyVectorField pi = reduce(pi_in, pr);
    if (pi.h_filtration() < 1)
        throw ZerothOrderViolation("dictionary input bivector has an h^0 term");
    HMat p = matrix_of(pi, pr.dim);
    for (auto& row : p)
        for (auto& e : row) e = downshift(e);
    HMat q = hmat_inverse(p, pr);
    ShiftedTwoForm w;
    for (int i = 1; i <= pr.dim; ++i)
        for (int j = i + 1; j <= pr.dim; ++j) {
            if (!(q[i - 1][j - 1] + q[j - 1][i - 1]).is_zero() ||
                !q[i - 1][i - 1].is_zero())
                throw NotAntisymmetric("inverse matrix lost skewness");
            if (!q[i - 1][j - 1].is_zero())
                w.times_h.add_component(static_cast<std::uint16_t>(bit(i) | bit(j)),
                                        q[i - 1][j - 1]);
        }
    return w;
}

PolyVectorField pi_from_omega(const ShiftedTwoForm& w, const TruncationProfile& pr) {
    if (w.times_h.degree != 2) throw ArityMismatch("2-form dictionary needs degree 2");
    DiffForm wh = reduce(w.times_h, pr);
    if (!reduce(de_rham(wh, pr.dim), pr).is_zero())
        throw NotClosed("2-form series components must be closed within the profile");
    HMat q = hmat_inverse(matrix_of(wh, pr.dim), pr);
    PolyVectorField out(2);
    for (int i = 1; i <= pr.dim; ++i)
        for (int j = i + 1; j <= pr.dim; ++j) {
            if (!(q[i - 1][j - 1] + q[j - 1][i - 1]).is_zero() ||
                !q[i - 1][i - 1].is_zero())
                throw NotAntisymmetric("inverse matrix lost skewness");
            HSeries e = reduce(q[i - 1][j - 1].shifted(1), pr);
            if (!e.is_zero())
                out.add_component(static_cast<std::uint16_t>(bit(i) | bit(j)), e);
        }
    return out;
}

}  // namespace starforge
