#include "starforge/dgla.hpp"

namespace starforge {

namespace dgla_detail {

std::vector<CRational> bernoulli_numbers(int n) {
    std::vector<CRational> b(n + 1, CRational::zero());
    b[0] = CRational::one();
    for (int m = 1; m <= n; ++m) {
        CRational acc = CRational::zero();
        CRational binom = CRational::one();  // C(m+1, j), built incrementally
        for (int j = 0; j < m; ++j) {
            acc = acc + binom * b[j];
            binom = binom * CRational(m + 1 - j) / CRational(j + 1);
        }
        b[m] = -acc / CRational(m + 1);
    }
    return b;
}

}  // namespace dgla_detail

int dgla_filtration_bound(const TruncationProfile& p) {
    return 2 * p.hbar_order + p.y_degree + p.dim + 1;
}

MCContext<PolyVectorField> polyvector_context(const TruncationProfile& p) {
    MCContext<PolyVectorField> ctx;
    int dim = p.dim;
    ctx.differential = [](const PolyVectorField& a) {
        return PolyVectorField(a.arity + 1);
    };
    ctx.bracket = [dim](const PolyVectorField& a, const PolyVectorField& b) {
        return schouten(a, b, dim);
    };
    ctx.filt = [](const PolyVectorField& a) { return a.h_filtration(); };
    ctx.filt_bound = dgla_filtration_bound(p);
    return ctx;
}

MCContext<PolyDiffOp> cochain_context(const TruncationProfile& p) {
    MCContext<PolyDiffOp> ctx;
    ctx.differential = [](const PolyDiffOp& a) {
        return hoch_coboundary(a, Product::pointwise());
    };
    ctx.bracket = [](const PolyDiffOp& a, const PolyDiffOp& b) {
        return gerstenhaber(a, b);
    };
    ctx.filt = [](const PolyDiffOp& a) { return a.h_filtration(); };
    ctx.filt_bound = dgla_filtration_bound(p);
    return ctx;
}

}  // namespace starforge
