#include "starforge/formal_ode.hpp"

namespace starforge {

ExpSolution solve_exp_prefactor(const CRational& rate,
                                const TPoly<PolyDiffOp>& D, const HSeries& h,
                                const TruncationProfile& pr) {
    HSeries h0 = HSeries::from_poly(h.coeff(0));
    if (h0.is_zero())
        throw NonInvertible("initial condition vanishes at h^0");
    HSeries h0inv = series_invert(h0, pr);

    // a scalar rate commutes with every operator, so conjugating the flow by
    // e^{t rate} only wraps D in multiplications by h0
    auto act = [&h0, &h0inv, &pr](const PolyDiffOp& op, const HSeries& v) {
        return reduce(h0inv * apply(op, {reduce(h0 * v, pr)}), pr);
    };
    HSeries v0 = reduce(h * h0inv, pr);
    TPoly<HSeries> tail = solve_linear(TPoly<HSeries>(), D, v0, act, pr);
    return {rate, h0, tail};
}

ProductExpPair product_exponential(const HSeries& d, const BilinearProduct& mult,
                                   const TruncationProfile& pr) {
    const TruncPoly& head = d.coeff(0);
    if (!head.is_zero() && head.degree() != 0)
        throw NonConstantZerothOrder(
            "exponent must be a scalar constant at h^0");
    CRational rate = head.coeff(MIdx{});

    HSeries dplus = d - HSeries::constant(rate);
    TPoly<HSeries> dp = TPoly<HSeries>::constant(dplus);

    auto left = [&mult, &pr](const HSeries& a, const HSeries& v) {
        return reduce(mult(a, v), pr);
    };
    auto right = [&mult, &pr](const HSeries& a, const HSeries& v) {
        return reduce(mult(v, a), pr).scaled(CRational(-1));
    };
    TPoly<HSeries> f = solve_linear(TPoly<HSeries>(), dp, HSeries::one(), left, pr);
    TPoly<HSeries> inv =
        solve_linear(TPoly<HSeries>(), dp, HSeries::one(), right, pr);
    return {rate, f, inv};
}

}  // namespace starforge
