#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "starforge/errors.hpp"
#include "starforge/gauge.hpp"
#include "test_util.hpp"

using namespace starforge;

namespace {

const TruncationProfile kPr(6, 4, 0, 2);
const TruncationProfile kP3(6, 4, 0, 3);
const TruncationProfile kP4(4, 3, 0, 4);

std::uint16_t pair_mask(int i, int j) {
    return static_cast<std::uint16_t>((1u << (i - 1)) | (1u << (j - 1)));
}

HSeries xv(int i, int hpow = 0) {
    return HSeries::from_poly(TruncPoly::variable(i), hpow);
}

HSeries hconst(const CRational& c, int hpow = 0) {
    return HSeries::from_poly(TruncPoly::constant(c), hpow);
}

PolyVectorField plane_field(const HSeries& c) {
    return PolyVectorField::monomial(2, pair_mask(1, 2), c);
}

DiffForm plane_form(const HSeries& c) {
    return DiffForm::monomial(2, pair_mask(1, 2), c);
}

// Rotation-algebra structure x3 d1^d2 + x1 d2^d3 - x2 d1^d3, scaled, at h^1.
PolyVectorField rotation_field(const CRational& scale) {
    PolyVectorField out(2);
    out.add_component(pair_mask(1, 2), xv(3, 1).scaled(scale));
    out.add_component(pair_mask(2, 3), xv(1, 1).scaled(scale));
    out.add_component(pair_mask(1, 3), (-xv(2, 1)).scaled(scale));
    return out;
}

// Nilpotent structure x3 d1^d2 at h^1.
PolyVectorField nilpotent_field() {
    return PolyVectorField::monomial(2, pair_mask(1, 2), xv(3, 1));
}

PolyVectorField block_field_dim4() {
    PolyVectorField out(2);
    out.add_component(pair_mask(1, 2), HSeries::one().shifted(1));
    out.add_component(pair_mask(3, 4), HSeries::one().shifted(1));
    return out;
}

PolyVectorField eval_path(const TPoly<PolyVectorField>& p, const CRational& t) {
    PolyVectorField out(2);
    for (const auto& [k, v] : p.coef) {
        CRational pw = CRational::one();
        for (int e = 0; e < k; ++e) pw = pw * t;
        out += v.scaled(pw);
    }
    return out;
}

PolyVectorField random_bivector(testutil::Rng& rng, int dim, int max_degree) {
    PolyVectorField out = testutil::random_polyvector(rng, dim, 2, max_degree, 1);
    out += testutil::random_polyvector(rng, dim, 2, max_degree, 2, 1);
    return out;
}

}  // namespace

TEST_CASE("gauge transform validates its input") {
    PolyVectorField pi = plane_field(HSeries::one().shifted(1));

    CHECK_THROWS_AS(gauge_transform(DiffForm(1), pi, kPr), ArityMismatch);
    CHECK_THROWS_AS(gauge_transform(DiffForm(2), PolyVectorField(1), kPr), ArityMismatch);
    CHECK_THROWS_AS(gauge_transform(DiffForm(2), plane_field(HSeries::one()), kPr),
                    ZerothOrderViolation);

    DiffForm open3 = DiffForm::monomial(2, pair_mask(1, 2), xv(3));
    CHECK_THROWS_AS(gauge_transform(open3, rotation_field(CRational::one()), kP3),
                    NotClosed);
    CHECK_THROWS_AS(gauge_flow(open3, rotation_field(CRational::one()), kP3), NotClosed);

    CHECK(gauge_transform(DiffForm(2), pi, kPr) == pi);
    CHECK(gauge_transform_ode(DiffForm(2), pi, kPr) == pi);
    CHECK(gauge_transform(plane_form(HSeries::one()), PolyVectorField(2), kPr) ==
          PolyVectorField(2));
}

TEST_CASE("constant forms on the plane follow the scalar geometric series") {
    PolyVectorField pi = plane_field(HSeries::one().shifted(1));

    // b dx1^dx2 rescales h pi_1 by 1/(1 - b h): all-plus for b = 1
    HSeries expect1;
    for (int k = 1; k <= 6; ++k) expect1 += HSeries::one().shifted(k);
    CHECK(gauge_transform(plane_form(HSeries::one()), pi, kPr) == plane_field(expect1));

    HSeries expect2;
    CRational pw = CRational::one();
    for (int k = 1; k <= 6; ++k) {
        expect2 += hconst(pw, k);
        pw = pw * CRational(-2);
    }
    CHECK(gauge_transform(plane_form(hconst(CRational(-2))), pi, kPr) ==
          plane_field(expect2));

    // an h-dependent form skips every other order
    HSeries expect3 = HSeries::one().shifted(1);
    expect3 += HSeries::one().shifted(3);
    expect3 += HSeries::one().shifted(5);
    CHECK(gauge_transform(plane_form(HSeries::one().shifted(1)), pi, kPr) ==
          plane_field(expect3));

    // opposite forms undo each other through the group law
    DiffForm b = plane_form(hconst(CRational(3, 2)));
    CHECK(gauge_transform(-b, gauge_transform(b, pi, kPr), kPr) == pi);
}

TEST_CASE("coefficient forms stay exact in the truncated ring") {
    PolyVectorField pi = plane_field(HSeries::one().shifted(1));
    DiffForm b = plane_form(xv(2));

    // x2-weighted form: the k-th order carries x2^{k-1} until the x-window
    // cuts it, and the flow solver lands on the same cut series
    HSeries expect;
    TruncPoly cur = TruncPoly::one();
    for (int k = 1; k <= 5; ++k) {
        expect += HSeries::from_poly(cur, k);
        cur = cur * TruncPoly::variable(2);
    }
    PolyVectorField a = gauge_transform(b, pi, kPr);
    CHECK(a == plane_field(expect));
    CHECK(gauge_transform_ode(b, pi, kPr) == a);

    DiffForm bp = plane_form(xv(1) * xv(2));
    CHECK(gauge_transform(b + bp, pi, kPr) ==
          gauge_transform(b, gauge_transform(bp, pi, kPr), kPr));
}

TEST_CASE("flow path evaluates to the series at scaled times") {
    PolyVectorField pi = plane_field(HSeries::one().shifted(1));
    DiffForm b = plane_form(hconst(CRational(2)) + xv(1));
    TPoly<PolyVectorField> path = gauge_flow(b, pi, kPr);
    for (const CRational& t :
         {CRational(1, 2), CRational(-1), CRational(3), CRational(2, 5)})
        CHECK(eval_path(path, t) == gauge_transform(b.scaled(t), pi, kPr));

    PolyVectorField rot = rotation_field(CRational(1, 2));
    DiffForm bc = DiffForm::monomial(2, pair_mask(2, 3), hconst(CRational(2)));
    TPoly<PolyVectorField> path3 = gauge_flow(bc, rot, kP3);
    for (const CRational& t : {CRational(1, 3), CRational(-2)})
        CHECK(eval_path(path3, t) == gauge_transform(bc.scaled(t), rot, kP3));

    CHECK(eval_path(path3, CRational::one()) == gauge_transform_ode(bc, rot, kP3));
}

TEST_CASE("series and flow agree on randomized closed data") {
    testutil::Rng rng(2026'08'16);
    for (int trial = 0; trial < 20; ++trial) {
        PolyVectorField pi = random_bivector(rng, 2, 2);
        DiffForm b = testutil::random_form(rng, 2, 2, 2);
        DiffForm bp = testutil::random_form(rng, 2, 2, 1);
        PolyVectorField a = gauge_transform(b, pi, kPr);
        CHECK(gauge_transform_ode(b, pi, kPr) == a);
        CHECK(gauge_transform(b + bp, pi, kPr) == gauge_transform(bp, a, kPr));
    }
    for (int trial = 0; trial < 12; ++trial) {
        PolyVectorField pi = random_bivector(rng, 3, 1);
        DiffForm b = testutil::random_form(rng, 3, 2, 0);
        DiffForm bp = reduce(de_rham(testutil::random_form(rng, 3, 1, 2), 3), kP3);
        PolyVectorField a = gauge_transform(b, pi, kP3);
        CHECK(gauge_transform_ode(b, pi, kP3) == a);
        CHECK(gauge_transform(b + bp, pi, kP3) == gauge_transform(bp, a, kP3));
    }
}

TEST_CASE("jacobi identity passes to the transformed structure") {
    std::vector<PolyVectorField> fields = {
        rotation_field(CRational::one()), rotation_field(CRational(-2, 3)),
        nilpotent_field(),
        PolyVectorField::monomial(2, pair_mask(1, 2), HSeries::one().shifted(1))};
    DiffForm quad_pot(1);
    quad_pot.add_component(0b100, xv(1) * xv(2));
    std::vector<DiffForm> forms = {
        DiffForm::monomial(2, pair_mask(1, 2), hconst(CRational(2))),
        DiffForm::monomial(2, pair_mask(2, 3), HSeries::one() + HSeries::one().shifted(2)),
        reduce(de_rham(quad_pot, 3), kP3)};
    for (const PolyVectorField& pi : fields) {
        REQUIRE(reduce(schouten(pi, pi, 3), kP3).is_zero());
        for (const DiffForm& b : forms) {
            PolyVectorField a = gauge_transform(b, pi, kP3);
            CHECK(reduce(schouten(a, a, 3), kP3).is_zero());
        }
    }
}

TEST_CASE("flow identity certifies that exact forms act by equivalences") {
    PolyVectorField pi = plane_field(HSeries::one().shifted(1));

    ExactFlowReport trivial = exact_equivalence_residual(DiffForm(1), pi, kPr);
    CHECK(trivial.poisson_input);
    CHECK(trivial.residual.is_zero());

    DiffForm lin_pot(1);
    lin_pot.add_component(0b10, xv(1).scaled(CRational(3)));
    ExactFlowReport flat = exact_equivalence_residual(lin_pot, pi, kPr);
    CHECK(flat.poisson_input);
    CHECK(flat.residual.is_zero());

    DiffForm quad_pot(1);
    quad_pot.add_component(0b100, xv(1) * xv(2));
    ExactFlowReport rot =
        exact_equivalence_residual(quad_pot, rotation_field(CRational::one()), kP3);
    CHECK(rot.poisson_input);
    CHECK(rot.residual.is_zero());
    ExactFlowReport nil = exact_equivalence_residual(quad_pot, nilpotent_field(), kP3);
    CHECK(nil.poisson_input);
    CHECK(nil.residual.is_zero());

    // coefficient-bearing plane structure: widen the x-window so the whole
    // path stays inside it, since the bracket differentiates cut terms back
    // under a tight cap
    TruncationProfile roomy(4, 5, 0, 2);
    PolyVectorField pix = plane_field((HSeries::one() + xv(1)).shifted(1));
    ExactFlowReport xdep = exact_equivalence_residual(lin_pot, pix, roomy);
    CHECK(xdep.poisson_input);
    CHECK(xdep.residual.is_zero());

    // the identity is only claimed for Poisson input, and the report says so
    PolyVectorField skew(2);
    skew.add_component(pair_mask(1, 2), xv(1, 1));
    skew.add_component(pair_mask(1, 3), xv(2, 1));
    REQUIRE_FALSE(reduce(schouten(skew, skew, 3), kP3).is_zero());
    ExactFlowReport flagged = exact_equivalence_residual(quad_pot, skew, kP3);
    CHECK_FALSE(flagged.poisson_input);

    CHECK_THROWS_AS(exact_equivalence_residual(DiffForm(2), pi, kPr), ArityMismatch);
}

TEST_CASE("two-form dictionary inverts the anchor") {
    PolyVectorField pi = plane_field(HSeries::one().shifted(1));
    ShiftedTwoForm w = omega_from_pi(pi, kPr);
    CHECK(w.times_h == plane_form(hconst(CRational(-1))));
    CHECK(w.component(-1) == plane_form(hconst(CRational(-1))));
    CHECK(w.component(0).is_zero());
    CHECK(pi_from_omega(w, kPr) == pi);

    // (h + a h^3) scaling inverts to the alternating h^2 geometric series
    CRational a(2, 3);
    PolyVectorField pia = plane_field(HSeries::one().shifted(1) + hconst(a, 3));
    HSeries inv_scale;
    CRational pw = CRational(-1);
    for (int k = 0; k <= 6; k += 2) {
        inv_scale += hconst(pw, k);
        pw = pw * (-a);
    }
    ShiftedTwoForm wa = omega_from_pi(pia, kPr);
    CHECK(wa.times_h == plane_form(inv_scale));
    CHECK(pi_from_omega(wa, kPr) == pia);

    // coefficient scaling inverts to the alternating x-geometric series
    PolyVectorField pix = plane_field((HSeries::one() + xv(1)).shifted(1));
    TruncPoly geo;
    CRational sign(-1);
    for (int k = 0; k <= 4; ++k) {
        geo.add_term(MIdx().bumped(0, k), sign);
        sign = -sign;
    }
    ShiftedTwoForm wx = omega_from_pi(pix, kPr);
    CHECK(wx.times_h == plane_form(HSeries::from_poly(geo)));
    CHECK(pi_from_omega(wx, kPr) == pix);

    // the anchor and the lowering map compose to h times the identity
    PolyVectorField mixed = block_field_dim4();
    mixed.add_component(pair_mask(1, 3), hconst(CRational(1, 2), 2) + xv(4, 1));
    ShiftedTwoForm wm = omega_from_pi(mixed, kP4);
    for (int i = 1; i <= 4; ++i) {
        DiffForm xi = DiffForm::basis(i);
        CHECK(reduce(contract(pi_sharp(mixed, xi, 4), wm.times_h, 4), kP4) ==
              reduce(xi.shifted(1), kP4));
        PolyVectorField ei = PolyVectorField::basis(i);
        CHECK(reduce(pi_sharp(mixed, contract(ei, wm.times_h, 4), 4), kP4) ==
              reduce(ei.shifted(1), kP4));
    }
    CHECK(pi_from_omega(wm, kP4) == reduce(mixed, kP4));

    // round trip starting from a closed series: the x-window terminates the
    // inverse series (x2^6 is cut), so the trip back is exact; series that
    // keep growing need the same order of headroom as the gauge comparison
    ShiftedTwoForm start;
    start.times_h =
        plane_form(hconst(CRational(-1)) + HSeries::from_poly(TruncPoly::variable(2) *
                                                              TruncPoly::variable(2), 2));
    CHECK(omega_from_pi(pi_from_omega(start, kPr), kPr).times_h == start.times_h);

    ShiftedTwoForm lin;
    lin.times_h = plane_form(hconst(CRational(-1)) + xv(2, 2));
    TruncationProfile head(7, 4, 0, 2);
    CHECK(reduce(omega_from_pi(pi_from_omega(lin, head), head).times_h, kPr) ==
          reduce(lin.times_h, kPr));
}

TEST_CASE("two-form dictionary rejects degenerate or open input") {
    CHECK_THROWS_AS(omega_from_pi(PolyVectorField(1), kPr), ArityMismatch);
    CHECK_THROWS_AS(omega_from_pi(plane_field(HSeries::one()), kPr),
                    ZerothOrderViolation);
    CHECK_THROWS_AS(omega_from_pi(plane_field(HSeries::one().shifted(2)), kPr),
                    DegeneratePi1);
    CHECK_THROWS_AS(omega_from_pi(plane_field(xv(1, 1)), kPr), DegeneratePi1);

    // odd dimension is automatically degenerate
    PolyVectorField flat3 = PolyVectorField::monomial(2, pair_mask(1, 2),
                                                      HSeries::one().shifted(1));
    CHECK_THROWS_AS(omega_from_pi(flat3, kP3), DegeneratePi1);

    ShiftedTwoForm open4;
    open4.times_h = DiffForm::monomial(2, pair_mask(1, 2), hconst(CRational(-1)));
    open4.times_h.add_component(pair_mask(3, 4), hconst(CRational(-1)) + xv(1));
    CHECK_THROWS_AS(pi_from_omega(open4, kP4), NotClosed);

    ShiftedTwoForm degenerate;
    degenerate.times_h = plane_form(HSeries::one().shifted(1));
    CHECK_THROWS_AS(pi_from_omega(degenerate, kPr), DegeneratePi1);
}

TEST_CASE("closedness of the series tracks the jacobi identity") {
    // transformed block structure: Poisson, coefficient-bearing, and its
    // series stays closed
    DiffForm pot(1);
    pot.add_component(0b0010, xv(1) * xv(3));
    DiffForm b = reduce(de_rham(pot, 4), kP4);
    PolyVectorField a = gauge_transform(b, block_field_dim4(), kP4);
    REQUIRE_FALSE(a == block_field_dim4());
    CHECK(reduce(schouten(a, a, 4), kP4).is_zero());
    CHECK(reduce(de_rham(omega_from_pi(a, kP4).times_h, 4), kP4).is_zero());

    // a skew perturbation breaks both sides at once
    PolyVectorField bad = block_field_dim4();
    bad.add_component(pair_mask(1, 3), xv(3, 1));
    CHECK_FALSE(reduce(schouten(bad, bad, 4), kP4).is_zero());
    CHECK_FALSE(reduce(de_rham(omega_from_pi(bad, kP4).times_h, 4), kP4).is_zero());
}

TEST_CASE("dictionary tracks the gauge action by adding the form") {
    // the top h-coefficient of an inverse series needs the next order of its
    // input, so the comparison runs with one order of headroom and reduces
    TruncationProfile head2(7, 4, 0, 2), head4(5, 3, 0, 4);
    PolyVectorField pi = plane_field(HSeries::one().shifted(1));
    for (const DiffForm& b :
         {plane_form(hconst(CRational(2))), plane_form(xv(1) + xv(2, 1))}) {
        PolyVectorField a = gauge_transform(b, pi, head2);
        DiffForm lhs = reduce(omega_from_pi(a, head2).times_h, kPr);
        DiffForm rhs = reduce(omega_from_pi(pi, head2).times_h + b.shifted(1), kPr);
        CHECK(lhs == rhs);
    }

    DiffForm pot(1);
    pot.add_component(0b0010, xv(1) * xv(3));
    DiffForm b4 = reduce(de_rham(pot, 4), head4);
    PolyVectorField a4 = gauge_transform(b4, block_field_dim4(), head4);
    DiffForm lhs = reduce(omega_from_pi(a4, head4).times_h, kP4);
    DiffForm rhs =
        reduce(omega_from_pi(block_field_dim4(), head4).times_h + b4.shifted(1), kP4);
    CHECK(lhs == rhs);
}
