#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "starforge/errors.hpp"
#include "starforge/hseries.hpp"
#include "starforge/weyl.hpp"
#include "test_util.hpp"

using namespace starforge;
using testutil::Rng;

namespace {
const TruncationProfile kP(6, 4, 6, 2);
}

TEST_CASE("complex rational arithmetic is exact") {
    CRational i = CRational::i();
    CHECK(i * i == CRational(-1));
    CRational a(mpq_class(3, 4), mpq_class(-1, 2));
    CRational b(mpq_class(2, 7), mpq_class(5, 3));
    CHECK((a + b) - b == a);
    CHECK(a * b / b == a);
    CHECK(a * a.inverse() == CRational::one());
    CHECK(CRational().is_zero());
    CHECK_THROWS_AS(CRational().inverse(), NonInvertible);
}

TEST_CASE("crational text form round-trips") {
    CRational a(mpq_class(3, 4), mpq_class(1, 2));
    CHECK(a.str() == "3/4+1/2*i");
    CHECK(parse_crational(a.str()) == a);
    CRational b(mpq_class(-2), mpq_class(-1, 3));
    CHECK(b.str() == "-2-1/3*i");
    CHECK(parse_crational(b.str()) == b);
    CHECK(parse_crational("i") == CRational::i());
    CHECK(parse_crational("-i") == -CRational::i());
    CHECK(CRational(5).str() == "5");
    CHECK(CRational::i().str() == "i");
    CHECK(parse_crational("7/3") == CRational(7, 3));
}

TEST_CASE("series_invert recovers the geometric series") {
    // (1 - b h)^{-1} = sum_k b^k h^k, checked coefficient by coefficient
    // against independently computed powers of b.
    CRational b(mpq_class(3, 5), mpq_class(1, 7));
    HSeries s = HSeries::one() - HSeries::constant(b).shifted(1);
    HSeries inv = series_invert(s, kP);
    CRational pw = CRational::one();
    for (int k = 0; k <= kP.hbar_order; ++k) {
        CHECK(inv.coeff(k).constant_term() == pw);
        CHECK(inv.coeff(k).terms.size() == 1);
        pw *= b;
    }
    CHECK(reduce(s * inv, kP) == HSeries::one());
}

TEST_CASE("series_invert of one is one") {
    CHECK(series_invert(HSeries::one(), kP) == HSeries::one());
}

TEST_CASE("series_invert rejects elements without constant term") {
    HSeries s = HSeries::from_poly(TruncPoly::variable(1), 1);  // h x^1
    CHECK_THROWS_AS(series_invert(s, kP), NonInvertible);
    CHECK_THROWS_AS(series_invert(HSeries(), kP), NonInvertible);
}

TEST_CASE("series_invert on weyl elements handles mixed jets") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        WeylElement s = testutil::random_weyl(rng, kP, 6, false);
        WeylElement body = s - WeylElement::constant(s.coeff(WeylKey{}));
        s = body + WeylElement::one();  // force constant term 1
        WeylElement inv = series_invert(s, kP);
        CHECK(reduce(s * inv, kP) == WeylElement::one());
        CHECK(reduce(inv * s, kP) == WeylElement::one());
    }
    CHECK_THROWS_AS(series_invert(WeylElement::dx_gen(1), kP), NonInvertible);
}

TEST_CASE("filtration degree counts h twice, y and dx once") {
    CHECK(filtration_degree(WeylElement::h_pow(1)) == 2);
    CHECK(filtration_degree(WeylElement::y_var(1) * WeylElement::y_var(2)) == 2);
    CHECK(filtration_degree(WeylElement::x_var(1)) == 0);
    CHECK(filtration_degree(WeylElement::dx_gen(2)) == 1);
    WeylElement mix = WeylElement::h_pow(2) + WeylElement::y_var(1);
    CHECK(filtration_degree(mix) == 1);
    CHECK_THROWS_AS(filtration_degree(WeylElement()), ZeroElement);
}

TEST_CASE("reduce drops whatever leaves the window and is idempotent") {
    TruncationProfile p1(1, 4, 6, 2);
    CHECK(reduce(HSeries::one().shifted(p1.hbar_order + 1), p1).is_zero());

    // (1 + h)^2 = 1 + 2h + h^2 -> 1 + 2h at first order in h.
    HSeries oneplus = HSeries::one() + HSeries::one().shifted(1);
    HSeries sq = reduce(oneplus * oneplus, p1);
    HSeries expect = HSeries::one() + HSeries::constant(CRational(2)).shifted(1);
    CHECK(sq == expect);

    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        WeylElement a = testutil::random_weyl(rng, TruncationProfile(9, 7, 9, 2), 10);
        WeylElement r = reduce(a, kP);
        CHECK(reduce(r, kP) == r);
    }
}

TEST_CASE("reduce is a ring map on the window") {
    Rng rng(11);
    for (int trial = 0; trial < 25; ++trial) {
        WeylElement a = testutil::random_weyl(rng, kP, 8);
        WeylElement b = testutil::random_weyl(rng, kP, 8);
        CHECK(reduce(a + b, kP) == reduce(reduce(a, kP) + reduce(b, kP), kP));
        CHECK(reduce(a * b, kP) == reduce(reduce(a, kP) * reduce(b, kP), kP));
    }
}

TEST_CASE("product is associative and distributive as literal term maps") {
    Rng rng(13);
    for (int trial = 0; trial < 15; ++trial) {
        WeylElement a = testutil::random_weyl(rng, kP, 5);
        WeylElement b = testutil::random_weyl(rng, kP, 5);
        WeylElement c = testutil::random_weyl(rng, kP, 5);
        CHECK((a * b) * c == a * (b * c));
        CHECK(a * (b + c) == a * b + a * c);
    }
}

TEST_CASE("graded commutativity with the Koszul sign is exact") {
    Rng rng(17);
    for (int q1 = 0; q1 <= 2; ++q1)
        for (int q2 = 0; q2 <= 2; ++q2)
            for (int trial = 0; trial < 5; ++trial) {
                WeylElement a = testutil::random_weyl_dx(rng, kP, 4, q1);
                WeylElement b = testutil::random_weyl_dx(rng, kP, 4, q2);
                WeylElement ba = b * a;
                if ((q1 * q2) % 2) ba = -ba;
                CHECK(a * b == ba);
            }
    WeylElement d1 = WeylElement::dx_gen(1);
    WeylElement d2 = WeylElement::dx_gen(2);
    CHECK(d1 * d2 == -(d2 * d1));
    CHECK((d1 * d1).is_zero());
}

TEST_CASE("profile stability of invert") {
    Rng rng(19);
    TruncationProfile wide(9, 7, 9, 2);
    for (int trial = 0; trial < 10; ++trial) {
        WeylElement s =
            testutil::random_weyl(rng, wide, 6, false) + WeylElement::constant(CRational(2));
        s = s - WeylElement::constant(s.coeff(WeylKey{}) - CRational(2));
        CHECK(series_invert(s, kP) == series_invert(reduce(s, kP), kP));
    }
}

TEST_CASE("canonical serialization and parse round-trip") {
    WeylKey key;
    key.k = 2;
    key.a = MIdx::unit(0);
    key.b = MIdx::unit(1).bumped(1, 2);
    key.s = DxMask(0b11);
    WeylElement w = WeylElement::monomial(key, CRational(mpq_class(3, 4), mpq_class(1, 2)));
    CHECK(w.str(2) == "3/4+1/2*i h^2 x^(1,0) y^(0,3) dx{1,2}");
    CHECK(parse_weyl(w.str(2), 2) == w);

    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        WeylElement a = testutil::random_weyl(rng, kP, 12);
        CHECK(parse_weyl(a.str(2), 2) == a);
    }
    CHECK(WeylElement().str(2) == "0");
    CHECK(parse_weyl("0", 2).is_zero());
    // Terms in the canonical order: h-power, then x, then y, then dx set.
    WeylElement two = WeylElement::x_var(1) + WeylElement::h_pow(1);
    CHECK(two.str(2) == "1 h^0 x^(1,0) y^(0,0) dx{} + 1 h^1 x^(0,0) y^(0,0) dx{}");
}

TEST_CASE("h division is exact or refuses") {
    WeylElement a = WeylElement::h_pow(2) * WeylElement::y_var(1);
    CHECK(a.div_h(2) == WeylElement::y_var(1));
    CHECK(a.div_h(1).div_h(1) == WeylElement::y_var(1));
    CHECK_THROWS_AS(a.div_h(3), NonDivisible);
    CHECK_THROWS_AS(WeylElement::one().div_h(1), NonDivisible);
}

TEST_CASE("derivatives and wedge operators act termwise") {
    WeylElement f = WeylElement::x_var(1) * WeylElement::x_var(1) * WeylElement::y_var(2);
    CHECK(f.d_x(1) == WeylElement::x_var(1) * WeylElement::y_var(2) * WeylElement::constant(CRational(2)));
    CHECK(f.d_y(2) == WeylElement::x_var(1) * WeylElement::x_var(1));
    CHECK(f.d_y(1).is_zero());

    WeylElement w = WeylElement::dx_gen(2);
    CHECK(w.wedge_dx(1) == WeylElement::dx_gen(1) * WeylElement::dx_gen(2));
    CHECK(w.wedge_dx(2).is_zero());
    CHECK((WeylElement::dx_gen(1) * WeylElement::dx_gen(2)).contract_dx(2) ==
          -WeylElement::dx_gen(1));
    CHECK((WeylElement::dx_gen(1) * WeylElement::dx_gen(2)).contract_dx(1) ==
          WeylElement::dx_gen(2));
}
