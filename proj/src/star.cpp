#include "starforge/star.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <utility>

#include "starforge/errors.hpp"

namespace starforge {
namespace {

using RMat = std::vector<CRational>;
using HMat = std::vector<HSeries>;

bool constant_in_x(const HSeries& s) {
    for (const auto& [k, p] : s.coeffs)
        if (p.degree() > 0) return false;
    return true;
}

RMat rmat_mul(const RMat& a, const RMat& b, int d) {
    RMat out(static_cast<size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            if (a[i * d + k].is_zero()) continue;
            for (int j = 0; j < d; ++j)
                out[i * d + j] += a[i * d + k] * b[k * d + j];
        }
    return out;
}

// Gauss-Jordan over the exact coefficient field.
RMat rmat_inverse(RMat a, int d) {
    RMat inv(static_cast<size_t>(d) * d);
    for (int i = 0; i < d; ++i) inv[i * d + i] = CRational::one();
    for (int col = 0; col < d; ++col) {
        int pivot = -1;
        for (int r = col; r < d; ++r)
            if (!a[r * d + col].is_zero()) {
                pivot = r;
                break;
            }
        if (pivot < 0) throw DegeneratePi1("first-order matrix is singular");
        if (pivot != col)
            for (int j = 0; j < d; ++j) {
                std::swap(a[pivot * d + j], a[col * d + j]);
                std::swap(inv[pivot * d + j], inv[col * d + j]);
            }
        CRational s = a[col * d + col].inverse();
        for (int j = 0; j < d; ++j) {
            a[col * d + j] = a[col * d + j] * s;
            inv[col * d + j] = inv[col * d + j] * s;
        }
        for (int r = 0; r < d; ++r) {
            if (r == col || a[r * d + col].is_zero()) continue;
            CRational f = a[r * d + col];
            for (int j = 0; j < d; ++j) {
                a[r * d + j] -= f * a[col * d + j];
                inv[r * d + j] -= f * inv[col * d + j];
            }
        }
    }
    return inv;
}

HMat hmat_mul(const HMat& a, const HMat& b, int d, const TruncationProfile& pr) {
    HMat out(static_cast<size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < d; ++k) {
            if (a[i * d + k].is_zero()) continue;
            for (int j = 0; j < d; ++j) {
                if (b[k * d + j].is_zero()) continue;
                out[i * d + j] += a[i * d + k] * b[k * d + j];
            }
        }
    for (auto& e : out) e = reduce(e, pr);
    return out;
}

HMat hmat_transpose(const HMat& a, int d) {
    HMat out(static_cast<size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[j * d + i] = a[i * d + j];
    return out;
}

bool hmat_is_zero(const HMat& a) {
    for (const auto& e : a)
        if (!e.is_zero()) return false;
    return true;
}

// exp(h^p c) for a constant matrix c, truncated at the profile's h-order.
HMat hmat_exp(const RMat& c, int hpow, int d, const TruncationProfile& pr) {
    HMat out(static_cast<size_t>(d) * d);
    for (int i = 0; i < d; ++i) out[i * d + i] = HSeries::one();
    RMat pw(static_cast<size_t>(d) * d);
    for (int i = 0; i < d; ++i) pw[i * d + i] = CRational::one();
    CRational invfact = CRational::one();
    for (int k = 1; k * hpow <= pr.hbar_order; ++k) {
        pw = rmat_mul(pw, c, d);
        invfact = invfact * CRational(1, k);
        for (int e = 0; e < d * d; ++e) {
            CRational v = pw[e] * invfact;
            if (!v.is_zero())
                out[e] += HSeries::from_poly(TruncPoly::constant(v), k * hpow);
        }
    }
    return out;
}

std::vector<MIdx> monomials_up_to(int dim, int deg) {
    std::vector<MIdx> out;
    std::function<void(MIdx, int, int)> rec = [&](MIdx cur, int var, int left) {
        if (var == dim) {
            out.push_back(cur);
            return;
        }
        for (int e = 0; e <= left; ++e) rec(cur.bumped(var, e), var + 1, left - e);
    };
    rec(MIdx(), 0, deg);
    std::sort(out.begin(), out.end(), [](const MIdx& a, const MIdx& b) {
        if (a.degree() != b.degree()) return a.degree() < b.degree();
        return a < b;
    });
    return out;
}

bool midx_leq(const MIdx& a, const MIdx& b) {
    for (int i = 0; i < kMaxDim; ++i)
        if (a[i] > b[i]) return false;
    return true;
}

MIdx midx_sub(const MIdx& a, const MIdx& b) {
    MIdx out = a;
    for (int i = 0; i < kMaxDim; ++i)
        if (b[i] > 0) out = out.bumped(i, -static_cast<int>(b[i]));
    return out;
}

// product over i of m_i (m_i - 1) .. (m_i - a_i + 1); a <= m gives d^a x^m
CRational falling(const MIdx& m, const MIdx& a) {
    CRational out = CRational::one();
    for (int i = 0; i < kMaxDim; ++i)
        for (int k = 0; k < a[i]; ++k) out = out * CRational(m[i] - k);
    return out;
}

HSeries monomial_series(const MIdx& m) {
    return HSeries::from_poly(TruncPoly::monomial(m, CRational::one()), 0);
}

PolyDiffOp compose1(const PolyDiffOp& p, const PolyDiffOp& q) {
    return insert_at(p, 0, q);
}

// exp of an arity-1 operator with h-filtration >= 1, exact at profile level
PolyDiffOp exp_op(const PolyDiffOp& x, const TruncationProfile& pr) {
    PolyDiffOp acc = PolyDiffOp::identity_op();
    PolyDiffOp term = PolyDiffOp::identity_op();
    CRational invfact = CRational::one();
    for (int k = 1; k <= pr.hbar_order + 1; ++k) {
        term = reduce(compose1(x, term), pr);
        if (term.is_zero()) break;
        invfact = invfact * CRational(1, k);
        acc += term.scaled(invfact);
    }
    return reduce(acc, pr);
}

}  // namespace

ConstPoissonMatrix::ConstPoissonMatrix(int d, std::vector<HSeries> e)
    : dim(d), entries(std::move(e)) {
    if (dim < 1 || dim > kMaxDim) throw ProfileError("matrix dimension out of range");
    if (entries.size() != static_cast<size_t>(dim) * dim)
        throw ArityMismatch("expected a square matrix of series");
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            const HSeries& s = at(i, j);
            if (!constant_in_x(s))
                throw EngineError("matrix entries must be constant in x");
            if (!s.is_zero() && s.h_filtration() < 1)
                throw ZerothOrderViolation("matrix must vanish at order h^0");
            if (j >= i && !(s + at(j, i)).is_zero())
                throw NotAntisymmetric("matrix entries at (" + std::to_string(i) +
                                       "," + std::to_string(j) + ") do not cancel");
        }
}

std::vector<CRational> ConstPoissonMatrix::order(int k) const {
    std::vector<CRational> out(entries.size());
    for (size_t e = 0; e < entries.size(); ++e)
        out[e] = entries[e].coeff(k).constant_term();
    return out;
}

ConstPoissonMatrix symplectic_matrix(int dim, const HSeries& scale) {
    if (dim % 2 != 0)
        throw DegeneratePi1("a symplectic matrix needs even dimension");
    std::vector<HSeries> e(static_cast<size_t>(dim) * dim);
    for (int m = 0; 2 * m + 1 < dim; ++m) {
        e[(2 * m) * dim + (2 * m + 1)] = scale;
        e[(2 * m + 1) * dim + (2 * m)] = scale.scaled(CRational(-1));
    }
    return ConstPoissonMatrix(dim, std::move(e));
}

StarProduct::StarProduct(PolyDiffOp b) : bidiff(std::move(b)) {
    if (bidiff.arity != 2) throw ArityMismatch("star correction must be bilinear");
    if (!bidiff.is_zero() && bidiff.h_filtration() < 1)
        throw FiltrationViolation("star correction must start at order h");
    if (!bidiff.is_normalized())
        throw ZerothOrderViolation("star correction must kill constants");
    defect = hoch_coboundary(bidiff, Product::pointwise());
    defect += gerstenhaber(bidiff, bidiff).scaled(CRational(1, 2));
}

HSeries star_apply(const StarProduct& s, const HSeries& f, const HSeries& g) {
    HSeries out = f * g;
    out += apply(s.bidiff, {f, g});
    return out;
}

Equivalence::Equivalence(PolyDiffOp o) : op(std::move(o)) {
    if (op.arity != 1) throw ArityMismatch("equivalence must be unary");
    PolyDiffOp tail = op - PolyDiffOp::identity_op();
    if (!tail.is_zero() && tail.h_filtration() < 1)
        throw ZerothOrderViolation("equivalence must start at the identity");
    if (!(apply(op, {HSeries::one()}) - HSeries::one()).is_zero())
        throw ZerothOrderViolation("equivalence must fix the constant 1");
}

Equivalence Equivalence::identity() {
    return Equivalence(PolyDiffOp::identity_op());
}

Equivalence Equivalence::inverse(const TruncationProfile& pr) const {
    // Neumann series of the induced map on the truncated algebra: with
    // R f = reduce(T f) - f, sum (-R)^k f monomial by monomial, then
    // re-interpolate the resulting map as an operator.  Summing the operator
    // itself instead would invert against exact composition, which is not
    // what reduce-after-apply chains compose to.
    std::vector<MIdx> mons = monomials_up_to(pr.dim, pr.x_degree);
    std::map<MIdx, HSeries> coef;
    for (const MIdx& mu : mons) {
        HSeries f = monomial_series(mu);
        HSeries acc = f;
        HSeries cur = f;
        for (int k = 1; k <= pr.hbar_order + 1; ++k) {
            cur = cur - reduce(apply(op, {cur}), pr);
            if (cur.is_zero()) break;
            acc += cur;
        }
        for (const auto& [alpha, c] : coef) {
            if (!midx_leq(alpha, mu)) continue;
            acc -= c * HSeries::from_poly(
                           TruncPoly::monomial(midx_sub(mu, alpha), falling(mu, alpha)),
                           0);
        }
        if (!acc.is_zero()) coef.emplace(mu, acc.scaled(falling(mu, mu).inverse()));
    }
    PolyDiffOp out(1);
    for (const auto& [alpha, c] : coef) out.add_term({alpha}, c);
    return Equivalence(reduce(out, pr));
}

HSeries equiv_apply(const Equivalence& t, const HSeries& f,
                    const TruncationProfile& pr) {
    return reduce(apply(t.op, {f}), pr);
}

StarProduct moyal(const ConstPoissonMatrix& pi, const TruncationProfile& pr) {
    if (pi.dim != pr.dim)
        throw ProfileError("matrix dimension does not match the profile");
    PolyDiffOp e1(2);
    for (int i = 0; i < pi.dim; ++i)
        for (int j = 0; j < pi.dim; ++j) {
            const HSeries& c = pi.at(i, j);
            if (!c.is_zero()) e1.add_term({MIdx::unit(i), MIdx::unit(j)}, c);
        }
    e1 = reduce(e1, pr);
    PolyDiffOp bidiff = e1;
    PolyDiffOp cur = e1;
    CRational invfact = CRational::one();
    for (int k = 2; k <= pr.hbar_order; ++k) {
        PolyDiffOp next(2);
        for (const auto& [sa, ca] : cur.terms)
            for (const auto& [sb, cb] : e1.terms)
                next.add_term({sa[0] + sb[0], sa[1] + sb[1]}, ca * cb);
        cur = reduce(next, pr);
        if (cur.is_zero()) break;
        invfact = invfact * CRational(1, k);
        bidiff += cur.scaled(invfact);
    }
    return StarProduct(reduce(bidiff, pr));
}

HSeries assoc_residual(const StarProduct& s, const HSeries& f, const HSeries& g,
                       const HSeries& h, const TruncationProfile& pr) {
    HSeries assoc = star_apply(s, star_apply(s, f, g), h) -
                    star_apply(s, f, star_apply(s, g, h));
    if (!(assoc + apply(s.defect, {f, g, h})).is_zero())
        throw EngineError("associator disagrees with its cochain evaluation");
    return reduce(assoc, pr);
}

StarProduct conjugate(const Equivalence& t, const StarProduct& s,
                      const TruncationProfile& pr) {
    Equivalence tinv = t.inverse(pr);
    std::vector<MIdx> mons = monomials_up_to(pr.dim, pr.x_degree);
    std::vector<HSeries> timg(mons.size());
    for (size_t a = 0; a < mons.size(); ++a)
        timg[a] = equiv_apply(t, monomial_series(mons[a]), pr);

    std::vector<std::pair<size_t, size_t>> order;
    for (size_t a = 0; a < mons.size(); ++a)
        for (size_t b = 0; b < mons.size(); ++b) order.emplace_back(a, b);
    std::sort(order.begin(), order.end(),
              [&](const std::pair<size_t, size_t>& p,
                  const std::pair<size_t, size_t>& q) {
                  int dp = mons[p.first].degree() + mons[p.second].degree();
                  int dq = mons[q.first].degree() + mons[q.second].degree();
                  if (dp != dq) return dp < dq;
                  return p < q;
              });

    std::map<std::pair<MIdx, MIdx>, HSeries> coef;
    for (const auto& [ia, ib] : order) {
        const MIdx& mu = mons[ia];
        const MIdx& nu = mons[ib];
        HSeries prod = reduce(star_apply(s, timg[ia], timg[ib]), pr);
        HSeries rem = equiv_apply(tinv, prod, pr) -
                      reduce(monomial_series(mu) * monomial_series(nu), pr);
        for (const auto& [key, c] : coef) {
            const MIdx& alpha = key.first;
            const MIdx& beta = key.second;
            if (!midx_leq(alpha, mu) || !midx_leq(beta, nu)) continue;
            CRational w = falling(mu, alpha) * falling(nu, beta);
            MIdx rest = midx_sub(mu, alpha) + midx_sub(nu, beta);
            rem -= c * HSeries::from_poly(TruncPoly::monomial(rest, w), 0);
        }
        if (rem.is_zero()) continue;
        CRational norm = (falling(mu, mu) * falling(nu, nu)).inverse();
        coef.emplace(std::make_pair(mu, nu), rem.scaled(norm));
    }

    PolyDiffOp out(2);
    for (const auto& [key, c] : coef) out.add_term({key.first, key.second}, c);
    return StarProduct(reduce(out, pr));
}

Equivalence moyal_normalizer(const ConstPoissonMatrix& pi,
                             const TruncationProfile& pr) {
    if (pi.dim != pr.dim)
        throw ProfileError("matrix dimension does not match the profile");
    const int d = pi.dim;
    RMat p1 = pi.order(1);
    RMat p1inv = rmat_inverse(p1, d);

    HMat cur(pi.entries.size());
    for (size_t e = 0; e < cur.size(); ++e) cur[e] = reduce(pi.entries[e], pr);

    PolyDiffOp comp = PolyDiffOp::identity_op();
    for (int m = 2; m <= pr.hbar_order; ++m) {
        RMat pm(static_cast<size_t>(d) * d);
        bool zero = true;
        for (int e = 0; e < d * d; ++e) {
            pm[e] = cur[e].coeff(m).constant_term();
            if (!pm[e].is_zero()) zero = false;
        }
        if (zero) continue;

        RMat chi = rmat_mul(pm, p1inv, d);
        for (auto& v : chi) v = v * CRational(1, 2);

        PolyDiffOp gen(1);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                if (chi[i * d + j].is_zero()) continue;
                gen.add_term({MIdx::unit(i)},
                             HSeries::from_poly(
                                 TruncPoly::variable(j + 1).scaled(chi[i * d + j]),
                                 m - 1));
            }
        comp = reduce(compose1(exp_op(gen, pr), comp), pr);

        RMat neg = chi;
        for (auto& v : neg) v = -v;
        HMat mexp = hmat_exp(neg, m - 1, d, pr);
        cur = hmat_mul(hmat_mul(mexp, cur, d, pr), hmat_transpose(mexp, d), d, pr);
    }

    for (int e = 0; e < d * d; ++e) {
        HSeries want = HSeries::from_poly(TruncPoly::constant(p1[e]), 1);
        if (!(cur[e] - reduce(want, pr)).is_zero())
            throw EngineError("normalizer sweep left a matrix remainder");
    }
    return Equivalence(comp);
}

BFieldFlow bfield_equivalence(const ConstPoissonMatrix& pi, const DiffForm& b,
                              const TruncationProfile& pr) {
    if (pi.dim != pr.dim)
        throw ProfileError("matrix dimension does not match the profile");
    const int d = pi.dim;
    if (b.degree != 2) throw ArityMismatch("a 2-form is required");
    if (!de_rham(b, d).is_zero()) throw NotClosed("the 2-form must be closed");
    for (const auto& [mask, c] : b.comp)
        if (!constant_in_x(c))
            throw EngineError("flow needs a 2-form with constant coefficients");

    HMat bm(static_cast<size_t>(d) * d);
    HMat up(static_cast<size_t>(d) * d);
    for (const auto& [mask, c] : b.comp) {
        int lo = __builtin_ctz(mask);
        int hi = 31 - __builtin_clz(static_cast<unsigned>(mask));
        bm[lo * d + hi] = c;
        bm[hi * d + lo] = c.scaled(CRational(-1));
        up[lo * d + hi] = c;
    }

    HMat p(pi.entries.size());
    for (size_t e = 0; e < p.size(); ++e) p[e] = reduce(pi.entries[e], pr);
    HMat s = hmat_mul(bm, p, d, pr);
    HMat upt = hmat_transpose(up, d);

    TPoly<PolyDiffOp> v;
    HMat a1(static_cast<size_t>(d) * d);
    HMat ak = p;
    for (int k = 0; k <= pr.hbar_order && !hmat_is_zero(ak); ++k) {
        if (k > 0) ak = hmat_mul(ak, s, d, pr);
        if (hmat_is_zero(ak)) break;
        for (int e = 0; e < d * d; ++e) a1[e] = reduce(a1[e] + ak[e], pr);
        HMat vk = hmat_mul(ak, upt, d, pr);
        PolyDiffOp piece(1);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                if (vk[i * d + j].is_zero()) continue;
                piece.add_term({MIdx::unit(i)},
                               vk[i * d + j].scaled(CRational(-1)) *
                                   HSeries::from_poly(TruncPoly::variable(j + 1), 0));
            }
        v.add_term(k, reduce(piece, pr));
    }

    auto act = [&pr](const PolyDiffOp& vp, const PolyDiffOp& tc) {
        return reduce(compose1(tc, vp), pr);
    };
    TPoly<PolyDiffOp> tflow = solve_linear(TPoly<PolyDiffOp>(), v,
                                           PolyDiffOp::identity_op(), act, pr);
    PolyDiffOp t1(1);
    for (const auto& [k, piece] : tflow.coef) t1 += piece;
    Equivalence transform(reduce(t1, pr));

    ConstPoissonMatrix target(d, a1);
    StarProduct endpoint = moyal(target, pr);
    StarProduct source = moyal(pi, pr);

    HSeries worst;
    bool ok = true;
    std::vector<MIdx> mons = monomials_up_to(d, pr.x_degree);
    for (const MIdx& mu : mons)
        for (const MIdx& nu : mons) {
            HSeries f = monomial_series(mu);
            HSeries g = monomial_series(nu);
            HSeries lhs =
                equiv_apply(transform, reduce(star_apply(endpoint, f, g), pr), pr);
            HSeries rhs = reduce(star_apply(source, equiv_apply(transform, f, pr),
                                            equiv_apply(transform, g, pr)),
                                 pr);
            HSeries res = lhs - rhs;
            if (!res.is_zero()) {
                ok = false;
                worst = res;
            }
        }

    return BFieldFlow{std::move(transform), std::move(target),
                      std::move(endpoint), std::move(worst), ok};
}

ProductExpPair star_exponential(const HSeries& d, const StarProduct& s,
                                const TruncationProfile& pr) {
    return product_exponential(
        d, [&s](const HSeries& a, const HSeries& b) { return star_apply(s, a, b); },
        pr);
}

TransitionReport transition_demo(const StarProduct& s,
                                 const std::array<HSeries, 3>& c,
                                 const std::array<CRational, 3>& symbol_mult,
                                 long n, const TruncationProfile& pr) {
    for (const HSeries& e : c)
        if (!constant_in_x(e))
            throw NonConstantCocycle("transition exponents must be constant in x");

    BilinearProduct mult = [&s](const HSeries& a, const HSeries& b) {
        return star_apply(s, a, b);
    };
    auto conv = [&](const TPoly<HSeries>& a, const TPoly<HSeries>& b) {
        return reduce(apply_tpoly(a, b,
                                  [&](const HSeries& x, const HSeries& y) {
                                      return reduce(mult(x, y), pr);
                                  }),
                      pr);
    };
    const TPoly<HSeries> unit = TPoly<HSeries>::constant(HSeries::one());

    ProductExpPair g01 = product_exponential(c[0], mult, pr);
    ProductExpPair g12 = product_exponential(c[1], mult, pr);
    ProductExpPair g20 = product_exponential(c[2], mult, pr);

    TransitionReport rep;
    rep.declared_n = n;

    ProductExpPair diag = product_exponential(HSeries(), mult, pr);
    rep.units_ok = diag.rate.is_zero() && diag.f == unit && diag.inv == unit;

    rep.inverses_ok = true;
    for (const ProductExpPair* g : {&g01, &g12, &g20}) {
        if (conv(g->f, g->inv) != unit || conv(g->inv, g->f) != unit)
            rep.inverses_ok = false;
    }
    for (size_t k = 0; k < 3; ++k) {
        ProductExpPair back = product_exponential(c[k].scaled(CRational(-1)), mult, pr);
        const ProductExpPair& fwd = (k == 0 ? g01 : k == 1 ? g12 : g20);
        if (back.f != fwd.inv || back.rate != -fwd.rate) rep.inverses_ok = false;
    }

    HSeries csum = reduce(c[0] + c[1] + c[2], pr);
    ProductExpPair total = product_exponential(csum, mult, pr);
    TPoly<HSeries> triple = conv(conv(g01.f, g12.f), g20.f);
    rep.tails_ok = (triple == total.f) &&
                   (g01.rate + g12.rate + g20.rate == total.rate);

    rep.exponent_sum = csum;
    rep.symbol_sum = symbol_mult[0] + symbol_mult[1] + symbol_mult[2];
    rep.cocycle_closes =
        csum.is_zero() && rep.symbol_sum == CRational(n) && rep.symbol_sum.is_real();

    auto exp_str = [&](const CRational& plain, const CRational& symbol) {
        if (plain.is_zero() && symbol.is_zero()) return std::string("1");
        std::string body;
        if (!plain.is_zero()) body = plain.str();
        if (!symbol.is_zero()) {
            if (!body.empty()) body += " + ";
            body += "(2 pi i) * " + symbol.str();
        }
        return "exp(" + body + ")";
    };

    if (rep.cocycle_closes) {
        rep.triple_at_one = "1";
    } else if (csum.is_zero()) {
        rep.triple_at_one = exp_str(CRational(), rep.symbol_sum);
    } else {
        std::string body = csum.str(pr.dim);
        if (!rep.symbol_sum.is_zero())
            body += " + (2 pi i) * " + rep.symbol_sum.str();
        rep.triple_at_one = "exp(" + body + ")";
    }

    for (size_t k = 0; k < 3; ++k)
        rep.classical_parts[k] =
            exp_str(c[k].coeff(0).constant_term(), symbol_mult[k]);

    return rep;
}

}  // namespace starforge
