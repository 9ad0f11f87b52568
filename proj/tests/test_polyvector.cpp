#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "starforge/errors.hpp"
#include "starforge/polyvector.hpp"
#include "test_util.hpp"

using namespace starforge;
using testutil::Rng;

namespace {

const int kDim = 3;

PolyVectorField so3_poisson() {
    // x3 d1^d2 + x1 d2^d3 + x2 d3^d1, multiplied by h: a linear structure
    // whose bracket closes (Jacobi holds exactly).
    PolyVectorField pi(2);
    pi.add_component(0b011, HSeries::from_poly(TruncPoly::variable(3), 1));
    pi.add_component(0b110, HSeries::from_poly(TruncPoly::variable(1), 1));
    pi.add_component(0b101, -HSeries::from_poly(TruncPoly::variable(2), 1));
    return pi;
}

HSeries x(int i) { return HSeries::from_poly(TruncPoly::variable(i)); }

}  // namespace

TEST_CASE("bracket with a function is minus the anchor of its differential") {
    PolyVectorField pi = PolyVectorField::wedge_basis(1, 2).shifted(1);  // h d1^d2
    HSeries f = x(1);
    PolyVectorField lhs = schouten(pi, PolyVectorField::function(f), 2);
    PolyVectorField expect(1);
    expect.add_component(0b10, -HSeries::one().shifted(1));  // -h d2
    CHECK(lhs == expect);
    CHECK(lhs == -pi_sharp(pi, d_function(f, 2), 2));

    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        PolyVectorField p = testutil::random_polyvector(rng, kDim, 2, 2, 1);
        HSeries g = testutil::random_function(rng, kDim, 3);
        CHECK(schouten(p, PolyVectorField::function(g), kDim) ==
              -pi_sharp(p, d_function(g, kDim), kDim));
    }
}

TEST_CASE("vector fields act on functions and close under the bracket") {
    PolyVectorField X = PolyVectorField::basis(1);
    HSeries f = x(1) * x(1);
    PolyVectorField res = schouten(X, PolyVectorField::function(f), 2);
    CHECK(res == PolyVectorField::function(x(1).scaled(CRational(2))));

    Rng rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        PolyVectorField A = testutil::random_polyvector(rng, kDim, 1, 3);
        PolyVectorField B = testutil::random_polyvector(rng, kDim, 1, 3);
        // commutator oracle computed directly component by component
        PolyVectorField expect(1);
        for (int i = 1; i <= kDim; ++i) {
            HSeries acc;
            for (int j = 1; j <= kDim; ++j) {
                std::uint16_t bj = static_cast<std::uint16_t>(1u << (j - 1));
                std::uint16_t bi = static_cast<std::uint16_t>(1u << (i - 1));
                acc += A.component(bj) * B.component(bi).dx(j);
                acc -= B.component(bj) * A.component(bi).dx(j);
            }
            expect.add_component(static_cast<std::uint16_t>(1u << (i - 1)), acc);
        }
        CHECK(schouten(A, B, kDim) == expect);
    }
}

TEST_CASE("bracket with a vector field is minus its Lie derivative") {
    // pi = d1^d2, X = x1 d1: Lie_X pi = -d1^d2, so [pi, X] = d1^d2.
    PolyVectorField pi = PolyVectorField::wedge_basis(1, 2);
    PolyVectorField X(1);
    X.add_component(0b01, x(1));
    CHECK(schouten(pi, X, 2) == PolyVectorField::wedge_basis(1, 2));

    // constant-coefficient bivectors commute with themselves
    PolyVectorField cpi = PolyVectorField::wedge_basis(1, 2) +
                          PolyVectorField::wedge_basis(1, 3).scaled(CRational(5, 3));
    CHECK(schouten(cpi, cpi, kDim).is_zero());
}

TEST_CASE("graded antisymmetry and graded Jacobi hold exactly") {
    Rng rng(41);
    auto sgn = [](int e) { return (e % 2) ? -1 : 1; };
    for (int trial = 0; trial < 12; ++trial) {
        int p = 1 + static_cast<int>(rng() % 3);
        int q = 1 + static_cast<int>(rng() % 3);
        int r = 1 + static_cast<int>(rng() % 2);
        PolyVectorField P = testutil::random_polyvector(rng, kDim, p, 2);
        PolyVectorField Q = testutil::random_polyvector(rng, kDim, q, 2);
        PolyVectorField R = testutil::random_polyvector(rng, kDim, r, 2);

        PolyVectorField anti = schouten(Q, P, kDim);
        if (sgn((p - 1) * (q - 1)) > 0) anti = -anti;
        CHECK(schouten(P, Q, kDim) == anti);

        PolyVectorField jac(p + q + r - 2);
        auto term = [&](const PolyVectorField& A, const PolyVectorField& B,
                        const PolyVectorField& C, int sa, int sc) {
            PolyVectorField t = schouten(schouten(A, B, kDim), C, kDim);
            return (sgn((sa - 1) * (sc - 1)) < 0) ? -t : t;
        };
        jac += term(P, Q, R, p, r);
        jac += term(Q, R, P, q, p);
        jac += term(R, P, Q, r, q);
        CHECK(jac.is_zero());
    }
}

TEST_CASE("anchor contracts one-forms and extends multiplicatively") {
    PolyVectorField pi = PolyVectorField::wedge_basis(1, 2).shifted(1);
    PolyVectorField expect(1);
    expect.add_component(0b10, HSeries::one().shifted(1));
    CHECK(pi_sharp(pi, DiffForm::basis(1), 2) == expect);  // h d2
    CHECK(pi_sharp(pi, DiffForm(1), 2).is_zero());

    Rng rng(43);
    for (int trial = 0; trial < 10; ++trial) {
        PolyVectorField p = testutil::random_polyvector(rng, kDim, 2, 2, 1);
        DiffForm a = testutil::random_form(rng, kDim, 1, 2);
        DiffForm b = testutil::random_form(rng, kDim, 1, 2);
        CHECK(pi_sharp(p, wedge(a, b, kDim), kDim) ==
              wedge(pi_sharp(p, a, kDim), pi_sharp(p, b, kDim), kDim));
    }
}

TEST_CASE("jacobiator vanishes for constant and two-dimensional structures") {
    PolyVectorField cpi = PolyVectorField::wedge_basis(1, 2).shifted(1) +
                          PolyVectorField::wedge_basis(2, 3).shifted(2);
    Rng rng(47);
    for (int trial = 0; trial < 5; ++trial) {
        HSeries f = testutil::random_function(rng, kDim, 3);
        HSeries g = testutil::random_function(rng, kDim, 3);
        HSeries h = testutil::random_function(rng, kDim, 3);
        CHECK(jacobiator(cpi, f, g, h, kDim).is_zero());
    }

    // any bivector on R^2 is integrable
    PolyVectorField pi2(2);
    pi2.add_component(0b11, HSeries::from_poly(TruncPoly::variable(1), 1));
    CHECK(jacobiator(pi2, x(1), x(2), x(1) * x(2), 2).is_zero());
}

TEST_CASE("jacobiator equals the bracket square on exact forms") {
    // frozen value: pi = h (x2 d1^d2 + d2^d3): Jac(x1,x2,x3) = -h^2
    PolyVectorField pi(2);
    pi.add_component(0b011, HSeries::from_poly(TruncPoly::variable(2), 1));
    pi.add_component(0b110, HSeries::one().shifted(1));
    HSeries jac = jacobiator(pi, x(1), x(2), x(3), kDim);
    CHECK(jac == -HSeries::one().shifted(2));

    Rng rng(53);
    for (int trial = 0; trial < 10; ++trial) {
        PolyVectorField p = testutil::random_polyvector(rng, kDim, 2, 2, 1);
        HSeries f = testutil::random_function(rng, kDim, 2);
        HSeries g = testutil::random_function(rng, kDim, 2);
        HSeries h = testutil::random_function(rng, kDim, 2);

        HSeries lhs = jacobiator(p, f, g, h, kDim);

        PolyVectorField sq = schouten(p, p, kDim);
        std::vector<DiffForm> dfs{d_function(f, kDim), d_function(g, kDim),
                                  d_function(h, kDim)};
        HSeries half_sq = evaluate(sq, dfs, kDim).scaled(CRational(1, 2));
        CHECK(lhs == half_sq);

        // second derivative form: [p,[p,f]] evaluated on (dg, dh)
        PolyVectorField d2f =
            schouten(p, schouten(p, PolyVectorField::function(f), kDim), kDim);
        std::vector<DiffForm> gh{d_function(g, kDim), d_function(h, kDim)};
        CHECK(lhs == evaluate(d2f, gh, kDim));
    }
}

TEST_CASE("order by order the bracket square matches component brackets") {
    Rng rng(59);
    for (int trial = 0; trial < 6; ++trial) {
        PolyVectorField p1 = testutil::random_polyvector(rng, kDim, 2, 2);
        PolyVectorField p2 = testutil::random_polyvector(rng, kDim, 2, 2);
        PolyVectorField pi = p1.shifted(1) + p2.shifted(2);
        HSeries f = testutil::random_function(rng, kDim, 2);
        HSeries g = testutil::random_function(rng, kDim, 2);
        HSeries h = testutil::random_function(rng, kDim, 2);

        PolyVectorField sq = schouten(pi, pi, kDim);
        std::vector<DiffForm> dfs{d_function(f, kDim), d_function(g, kDim),
                                  d_function(h, kDim)};
        HSeries lhs = evaluate(sq, dfs, kDim).scaled(CRational(1, 2));

        // right side assembled from h-free component structures
        auto comp_jac = [&](const PolyVectorField& a, const PolyVectorField& b) {
            HSeries out = poisson_bracket(a, f, poisson_bracket(b, g, h, kDim), kDim);
            out += poisson_bracket(a, g, poisson_bracket(b, h, f, kDim), kDim);
            out += poisson_bracket(a, h, poisson_bracket(b, f, g, kDim), kDim);
            return out;
        };
        const PolyVectorField* comps[3] = {nullptr, &p1, &p2};
        for (int n = 2; n <= 4; ++n) {
            HSeries rhs;
            for (int i = 1; i <= n - 1; ++i) {
                int j = n - i;
                if (i > 2 || j > 2 || j < 1) continue;
                rhs += comp_jac(*comps[i], *comps[j]);
            }
            CHECK(HSeries::from_poly(lhs.coeff(n)) == rhs);
        }
    }
}

TEST_CASE("exterior derivative squares to zero and matches textbook cases") {
    // d(x1 dx2) = dx1^dx2
    DiffForm eta(1);
    eta.add_component(0b10, x(1));
    DiffForm expect(2);
    expect.add_component(0b11, HSeries::one());
    CHECK(de_rham(eta, 2) == expect);

    // top degree dies
    Rng rtop(61);
    DiffForm top(2);
    top.add_component(0b11, testutil::random_function(rtop, 2, 3));
    CHECK(de_rham(top, 2).is_zero());

    Rng rng(67);
    for (int trial = 0; trial < 10; ++trial) {
        DiffForm a = testutil::random_form(rng, kDim, 1, 3);
        CHECK(de_rham(de_rham(a, kDim), kDim).is_zero());
        DiffForm b = testutil::random_form(rng, kDim, 0, 3);
        CHECK(de_rham(de_rham(b, kDim), kDim).is_zero());
    }
}

TEST_CASE("anchor intertwines d with the bracket differential for closed structures") {
    PolyVectorField pi = so3_poisson();
    REQUIRE(schouten(pi, pi, kDim).is_zero());
    Rng rng(71);
    for (int trial = 0; trial < 8; ++trial) {
        DiffForm eta = testutil::random_form(rng, kDim, 1, 2);
        PolyVectorField lhs = pi_sharp(pi, de_rham(eta, kDim), kDim);
        PolyVectorField rhs = schouten(pi, pi_sharp(pi, eta, kDim), kDim);
        CHECK(lhs == -rhs);
    }
}

TEST_CASE("graphs of the anchor are isotropic") {
    Rng rng(73);
    for (int trial = 0; trial < 8; ++trial) {
        PolyVectorField p = testutil::random_polyvector(rng, kDim, 2, 2, 1);
        for (int i = 1; i <= kDim; ++i)
            for (int j = 1; j <= kDim; ++j) {
                DiffForm xi = DiffForm::basis(i);
                DiffForm etaf = DiffForm::basis(j);
                GenSection a(pi_sharp(p, xi, kDim), xi);
                GenSection b(pi_sharp(p, etaf, kDim), etaf);
                CHECK(pairing(a, b, kDim).is_zero());
            }
    }
}

TEST_CASE("pairing and courant bracket textbook values") {
    GenSection e1(PolyVectorField::basis(1), DiffForm(1));
    GenSection e2(PolyVectorField(1), DiffForm::basis(1));
    CHECK(pairing(e1, e2, 2) == HSeries::one());

    GenSection a(PolyVectorField::basis(1), DiffForm(1));
    GenSection b(PolyVectorField::basis(2), DiffForm(1));
    GenSection c = courant(a, b, 2);
    CHECK(c.vec.is_zero());
    CHECK(c.form.is_zero());
}

TEST_CASE("courant pairing of anchor graphs computes the jacobiator") {
    Rng rng(79);
    for (int trial = 0; trial < 8; ++trial) {
        PolyVectorField p = testutil::random_polyvector(rng, kDim, 2, 2, 1);
        HSeries f = testutil::random_function(rng, kDim, 2);
        HSeries g = testutil::random_function(rng, kDim, 2);
        HSeries h = testutil::random_function(rng, kDim, 2);
        auto graph = [&](const HSeries& fn) {
            DiffForm dfn = d_function(fn, kDim);
            return GenSection(pi_sharp(p, dfn, kDim), dfn);
        };
        HSeries lhs = pairing(courant(graph(f), graph(g), kDim), graph(h), kDim);
        CHECK(lhs == jacobiator(p, f, g, h, kDim));
    }
}

TEST_CASE("b-transform: identity at zero, group law, pairing preserved") {
    Rng rng(83);
    for (int trial = 0; trial < 8; ++trial) {
        GenSection e(testutil::random_polyvector(rng, kDim, 1, 2),
                     testutil::random_form(rng, kDim, 1, 2));
        GenSection e2(testutil::random_polyvector(rng, kDim, 1, 2),
                      testutil::random_form(rng, kDim, 1, 2));
        DiffForm B = testutil::random_form(rng, kDim, 2, 2);
        DiffForm B2 = testutil::random_form(rng, kDim, 2, 2);

        CHECK(b_transform(DiffForm(2), e, kDim) == e);
        CHECK(b_transform(B + B2, e, kDim) ==
              b_transform(B, b_transform(B2, e, kDim), kDim));
        CHECK(pairing(b_transform(B, e, kDim), b_transform(B, e2, kDim), kDim) ==
              pairing(e, e2, kDim));
    }
}

TEST_CASE("b-transform respects courant exactly for closed b") {
    Rng rng(89);
    for (int trial = 0; trial < 6; ++trial) {
        DiffForm theta = testutil::random_form(rng, kDim, 1, 3);
        DiffForm B = de_rham(theta, kDim);  // closed by construction
        GenSection e1(testutil::random_polyvector(rng, kDim, 1, 2),
                      testutil::random_form(rng, kDim, 1, 2));
        GenSection e2(testutil::random_polyvector(rng, kDim, 1, 2),
                      testutil::random_form(rng, kDim, 1, 2));
        CHECK(courant(b_transform(B, e1, kDim), b_transform(B, e2, kDim), kDim) ==
              b_transform(B, courant(e1, e2, kDim), kDim));
    }

    // witness that closedness is needed: B = x3 dx1^dx2 twists the bracket
    DiffForm B(2);
    B.add_component(0b011, x(3));
    GenSection e1(PolyVectorField::basis(1), DiffForm(1));
    GenSection e2(PolyVectorField::basis(2), DiffForm(1));
    GenSection lhs = courant(b_transform(B, e1, kDim), b_transform(B, e2, kDim), kDim);
    GenSection rhs = b_transform(B, courant(e1, e2, kDim), kDim);
    CHECK(!(lhs == rhs));
}

TEST_CASE("polyvector and form serialization is canonical") {
    PolyVectorField pi = so3_poisson();
    CHECK(pi.str(3) ==
          "[1 h^1 x^(0,0,1)] ∂(1,2) + [-1 h^1 x^(0,1,0)] ∂(1,3) + "
          "[1 h^1 x^(1,0,0)] ∂(2,3)");
    DiffForm eta(1);
    eta.add_component(0b10, x(1));
    CHECK(eta.str(2) == "[1 h^0 x^(1,0)] dx(2)");
    CHECK(DiffForm(2).str(2) == "0");
}
