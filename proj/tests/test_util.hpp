#pragma once

#include <random>

#include "starforge/hochschild.hpp"
#include "starforge/hseries.hpp"
#include "starforge/polyvector.hpp"
#include "starforge/profile.hpp"
#include "starforge/trunc_poly.hpp"
#include "starforge/weyl.hpp"

namespace starforge::testutil {

using Rng = std::mt19937;

inline CRational random_crational(Rng& rng, bool complex_part = true) {
    std::uniform_int_distribution<int> num(-6, 6);
    std::uniform_int_distribution<int> den(1, 5);
    CRational c(mpq_class(num(rng), den(rng)), mpq_class(0));
    c.re.canonicalize();
    if (complex_part && num(rng) > 3) {
        c.im = mpq_class(num(rng), den(rng));
        c.im.canonicalize();
    }
    return c;
}

inline MIdx random_midx(Rng& rng, int dim, int max_degree) {
    std::uniform_int_distribution<int> deg(0, max_degree);
    std::uniform_int_distribution<int> var(0, dim - 1);
    MIdx m;
    int d = deg(rng);
    for (int i = 0; i < d; ++i) m = m.bumped(var(rng));
    return m;
}

inline TruncPoly random_poly(Rng& rng, const TruncationProfile& p, int nterms,
                             int max_degree = -1) {
    if (max_degree < 0) max_degree = p.x_degree;
    TruncPoly out;
    for (int t = 0; t < nterms; ++t)
        out.add_term(random_midx(rng, p.dim, max_degree), random_crational(rng));
    return out;
}

inline HSeries random_hseries(Rng& rng, const TruncationProfile& p, int nterms) {
    std::uniform_int_distribution<int> hp(0, p.hbar_order);
    HSeries out;
    for (int t = 0; t < nterms; ++t)
        out.add_term(hp(rng), random_poly(rng, p, 1));
    return out;
}

inline WeylElement random_weyl(Rng& rng, const TruncationProfile& p, int nterms,
                               bool with_dx = true) {
    std::uniform_int_distribution<int> hp(0, p.hbar_order);
    std::uniform_int_distribution<int> mask(0, with_dx ? (1 << p.dim) - 1 : 0);
    WeylElement out;
    for (int t = 0; t < nterms; ++t) {
        WeylKey key;
        key.k = hp(rng);
        key.a = random_midx(rng, p.dim, p.x_degree);
        key.b = random_midx(rng, p.dim, p.y_degree);
        key.s = DxMask(static_cast<std::uint16_t>(mask(rng)));
        out.add_term(key, random_crational(rng));
    }
    return out;
}

// Polyvector of arity k whose coefficients are polynomials of degree at most
// max_degree, each multiplied by h^hshift.
inline PolyVectorField random_polyvector(Rng& rng, int dim, int k, int max_degree,
                                         int hshift = 0, int terms_per_comp = 2) {
    PolyVectorField out(k);
    std::uniform_int_distribution<int> var(1, dim);
    for (int t = 0; t < 3; ++t) {
        std::uint16_t mask = 0;
        int picked = 0;
        for (int tries = 0; picked < k && tries < 32; ++tries) {
            int i = var(rng);
            if (!(mask & (1u << (i - 1)))) {
                mask |= static_cast<std::uint16_t>(1u << (i - 1));
                ++picked;
            }
        }
        if (picked < k) continue;
        TruncationProfile q(0, max_degree, 0, dim);
        HSeries c = HSeries::from_poly(random_poly(rng, q, terms_per_comp), hshift);
        out.add_component(mask, c);
    }
    return out;
}

inline DiffForm random_form(Rng& rng, int dim, int q, int max_degree, int hshift = 0,
                            int terms_per_comp = 2) {
    DiffForm out(q);
    std::uniform_int_distribution<int> var(1, dim);
    for (int t = 0; t < 3; ++t) {
        std::uint16_t mask = 0;
        int picked = 0;
        for (int tries = 0; picked < q && tries < 32; ++tries) {
            int i = var(rng);
            if (!(mask & (1u << (i - 1)))) {
                mask |= static_cast<std::uint16_t>(1u << (i - 1));
                ++picked;
            }
        }
        if (picked < q) continue;
        TruncationProfile pr(0, max_degree, 0, dim);
        HSeries c = HSeries::from_poly(random_poly(rng, pr, terms_per_comp), hshift);
        out.add_component(mask, c);
    }
    return out;
}

inline HSeries random_function(Rng& rng, int dim, int max_degree, int nterms = 3) {
    TruncationProfile pr(0, max_degree, 0, dim);
    return HSeries::from_poly(random_poly(rng, pr, nterms));
}

// dx-homogeneous element of the given dx-degree.
inline WeylElement random_weyl_dx(Rng& rng, const TruncationProfile& p, int nterms,
                                  int q) {
    std::uniform_int_distribution<int> hp(0, p.hbar_order);
    std::uniform_int_distribution<int> mask(0, (1 << p.dim) - 1);
    WeylElement out;
    for (int t = 0; t < nterms;) {
        DxMask s(static_cast<std::uint16_t>(mask(rng)));
        if (s.size() != q) continue;
        WeylKey key;
        key.k = hp(rng);
        key.a = random_midx(rng, p.dim, p.x_degree);
        key.b = random_midx(rng, p.dim, p.y_degree);
        key.s = s;
        out.add_term(key, random_crational(rng));
        ++t;
    }
    return out;
}

// Correction cochain of the two-coordinate exponential product whose bracket
// is [x1, x2] = 2 c h, assembled order by order: the k-th term is
// (1/k!) (c h)^k (d1 (x) d2 - d2 (x) d1)^k.
inline PolyDiffOp moyal_correction(const CRational& c, int orders) {
    PolyDiffOp out(2);
    CRational inv_fact = CRational::one();
    for (int k = 1; k <= orders; ++k) {
        inv_fact = inv_fact / CRational(k);
        CRational binom = CRational::one();
        for (int m = 0; m <= k; ++m) {
            MIdx left, right;
            for (int t = 0; t < m; ++t) {
                left = left.bumped(0);
                right = right.bumped(1);
            }
            for (int t = 0; t < k - m; ++t) {
                left = left.bumped(1);
                right = right.bumped(0);
            }
            CRational coeff = inv_fact * binom;
            if ((k - m) % 2 == 1) coeff = -coeff;
            for (int t = 0; t < k; ++t) coeff = coeff * c;
            out.add_term({left, right},
                         HSeries::from_poly(TruncPoly::constant(coeff), k));
            binom = binom * CRational(k - m) / CRational(m + 1);
        }
    }
    return out;
}

}  // namespace starforge::testutil
