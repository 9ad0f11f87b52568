#pragma once

#include "starforge/formal_ode.hpp"
#include "starforge/polyvector.hpp"
#include "starforge/profile.hpp"

namespace starforge {

// Action of a closed 2-form on a formal bivector: the unique bivector whose
// anchor is pi_sharp composed with the inverse of (id + B_sharp pi_sharp),
// Neumann-summed within the profile and re-read off the coordinate coframe.
// Both contractions use the first slot; under that convention the 2-form
// series of the result is the 2-form series of pi plus B.
PolyVectorField gauge_transform(const DiffForm& b, const PolyVectorField& pi,
                                const TruncationProfile& pr);

// Flow-parameter path p(t) with d/dt p(t) = p(t)^sharp(B), p(0) = pi, solved
// by fixed-point iteration on the integral form.  Its time-1 endpoint agrees
// with gauge_transform term-for-term, and p(t) at rational t agrees with
// gauge_transform for t B.
TPoly<PolyVectorField> gauge_flow(const DiffForm& b, const PolyVectorField& pi,
                                  const TruncationProfile& pr);
PolyVectorField gauge_transform_ode(const DiffForm& b, const PolyVectorField& pi,
                                    const TruncationProfile& pr);

// Residual of the flow identity d/dt p(t) = [p(t), X(t)] with
// X(t) = -p(t)^sharp(theta) along the path for B = d theta.  A zero residual
// certifies that exact 2-forms act by equivalences of Poisson structures;
// the identity is only claimed on Poisson input, which the report flags.
struct ExactFlowReport {
    bool poisson_input = false;
    TPoly<PolyVectorField> residual;
};
ExactFlowReport exact_equivalence_residual(const DiffForm& theta,
                                           const PolyVectorField& pi,
                                           const TruncationProfile& pr);

// 2-form series starting one power below h^0, stored multiplied by h so all
// carried powers are nonnegative.
struct ShiftedTwoForm {
    DiffForm times_h{2};

    // Coefficient of h^{j+1}, j >= -1, as an h-constant form.
    DiffForm component(int j) const;
};

// Inverse-matrix dictionary between bivectors with invertible leading
// coefficient matrix at the origin and shifted 2-form series: the anchor of
// pi and the lowering map of omega compose to the identity within the
// profile, and the round trip is the identity on components.
ShiftedTwoForm omega_from_pi(const PolyVectorField& pi, const TruncationProfile& pr);
PolyVectorField pi_from_omega(const ShiftedTwoForm& w, const TruncationProfile& pr);

}  // namespace starforge
