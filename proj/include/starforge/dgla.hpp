#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "starforge/errors.hpp"
#include "starforge/hochschild.hpp"
#include "starforge/polyvector.hpp"
#include "starforge/profile.hpp"
#include "starforge/rational.hpp"

namespace starforge {

// Structure functions of a filtered differential graded Lie algebra.  The
// carrier type T needs +=, -=, binary + and -, scaled(), and is_zero(); the
// three callables must be pure.  filt is only consulted on nonzero elements
// and must be superadditive under the bracket for the series below to stop.
template <class T>
struct MCContext {
    std::function<T(const T&)> differential;
    std::function<T(const T&, const T&)> bracket;
    std::function<int(const T&)> filt;
    int filt_bound = 0;  // summands with filtration past this are dropped
};

// Finite family of multilinear structure maps; maps[n-1] takes n arguments.
// Maps beyond the family are zero, so every series over the family is finite.
template <class S, class U>
struct LInfMorphism {
    std::vector<std::function<U(const std::vector<S>&)>> maps;

    int cutoff() const { return static_cast<int>(maps.size()); }
};

namespace dgla_detail {

template <class T>
int filt_of(const MCContext<T>& ctx, const T& a) {
    return a.is_zero() ? kInfiniteDegree : ctx.filt(a);
}

// Aborts series whose terms stop climbing in filtration degree.
struct FiltrationWatch {
    int high = std::numeric_limits<int>::min();
    int stale = 0;

    void observe(int f) {
        if (f > high) {
            high = f;
            stale = 0;
        } else if (++stale > 64) {
            throw NoConvergence(
                "bracket iteration is not raising the filtration degree");
        }
    }
};

inline CRational inverse_factorial(int n) {
    CRational r = CRational::one();
    for (int k = 2; k <= n; ++k) r = r / CRational(k);
    return r;
}

// B_0..B_n by the defining recurrence; only even entries are used here.
std::vector<CRational> bernoulli_numbers(int n);

}  // namespace dgla_detail

// d a + 1/2 [a, a]; vanishes exactly when a is Maurer-Cartan.
template <class T>
T mc_residual(const T& alpha, const MCContext<T>& ctx) {
    if (dgla_detail::filt_of(ctx, alpha) < 1)
        throw FiltrationViolation(
            "Maurer-Cartan candidates need filtration degree >= 1");
    T res = ctx.differential(alpha);
    res += ctx.bracket(alpha, alpha).scaled(CRational(1, 2));
    return res;
}

// Right group action on Maurer-Cartan elements,
//   a^{exp xi} = exp([., xi]) a + ((exp([., xi]) - 1)/[., xi]) d xi,
// summed until terms climb past the context's filtration bound.
template <class T>
T gauge_action(const T& alpha, const T& xi, const MCContext<T>& ctx) {
    if (dgla_detail::filt_of(ctx, xi) < 1)
        throw FiltrationViolation("gauge generators need filtration degree >= 1");
    dgla_detail::FiltrationWatch watch;

    T out = alpha;
    T cur = alpha;
    CRational coeff = CRational::one();
    for (int n = 1; !cur.is_zero(); ++n) {
        cur = ctx.bracket(cur, xi);
        if (cur.is_zero()) break;
        int f = ctx.filt(cur);
        if (f > ctx.filt_bound) break;
        watch.observe(f);
        coeff = coeff / CRational(n);
        out += cur.scaled(coeff);
    }

    cur = ctx.differential(xi);
    coeff = CRational::one();
    for (int n = 0; !cur.is_zero(); ++n) {
        int f = ctx.filt(cur);
        if (f > ctx.filt_bound) break;
        watch.observe(f);
        if (n > 0) coeff = coeff / CRational(n + 1);
        out += cur.scaled(coeff);
        cur = ctx.bracket(cur, xi);
    }
    return out;
}

// log(exp(xi) exp(eta)) by the degree-by-degree recursion
//   (n+1) z_{n+1} = 1/2 [xi - eta, z_n]
//                 + sum_{2 <= 2p <= n} B_{2p}/(2p)! W_{2p}(n),
//   W_m(j) = sum_k [z_k, W_{m-1}(j-k)],  W_0(0) = xi + eta,
// with z_n dropped once its filtration passes the context bound.
template <class T>
T campbell_hausdorff(const T& xi, const T& eta, const MCContext<T>& ctx) {
    if (dgla_detail::filt_of(ctx, xi) < 1 || dgla_detail::filt_of(ctx, eta) < 1)
        throw FiltrationViolation(
            "Campbell-Hausdorff arguments need filtration degree >= 1");

    const int bound = ctx.filt_bound;
    T zero = xi;
    zero -= xi;

    std::vector<T> z;
    z.push_back(xi + eta);
    if (dgla_detail::filt_of(ctx, z[0]) > bound) return zero;

    std::vector<CRational> bern = dgla_detail::bernoulli_numbers(bound + 1);
    std::vector<std::vector<T>> w(bound + 1,
                                  std::vector<T>(bound + 1, zero));
    std::vector<std::vector<bool>> have(bound + 1,
                                        std::vector<bool>(bound + 1, false));
    w[0][0] = z[0];
    for (int j = 0; j <= bound; ++j) have[0][j] = true;

    std::function<const T&(int, int)> W = [&](int m, int j) -> const T& {
        if (!have[m][j]) {
            T acc = zero;
            for (int k = 1; k + (m - 1) <= j; ++k)
                acc += ctx.bracket(z[k - 1], W(m - 1, j - k));
            w[m][j] = acc;
            have[m][j] = true;
        }
        return w[m][j];
    };

    dgla_detail::FiltrationWatch watch;
    T xmy = xi - eta;
    T total = z[0];
    for (int n = 1; n < bound; ++n) {
        T rhs = ctx.bracket(xmy, z[n - 1]).scaled(CRational(1, 2));
        for (int p = 1; 2 * p <= n; ++p) {
            const T& wt = W(2 * p, n);
            if (wt.is_zero()) continue;
            rhs += wt.scaled(bern[2 * p] * dgla_detail::inverse_factorial(2 * p));
        }
        T next = rhs.scaled(CRational(1, n + 1));
        if (!next.is_zero()) {
            int f = ctx.filt(next);
            watch.observe(f);
            if (f > bound) {
                next = zero;
            } else {
                total += next;
            }
        }
        z.push_back(next);
    }
    return total;
}

// Same bracket, differential shifted to d + [alpha, .].
template <class T>
MCContext<T> twist(const MCContext<T>& ctx, const T& alpha) {
    MCContext<T> out = ctx;
    auto d = ctx.differential;
    auto br = ctx.bracket;
    out.differential = [d, br, alpha](const T& a) {
        T r = d(a);
        r += br(alpha, a);
        return r;
    };
    return out;
}

// Pushforward of a Maurer-Cartan element, sum_n 1/n! F_n(a, ..., a).
template <class S, class U>
U linf_push(const LInfMorphism<S, U>& F, const S& alpha,
            const MCContext<S>& ctx) {
    if (F.cutoff() < 1)
        throw ArityMismatch("a morphism needs at least one structure map");
    if (dgla_detail::filt_of(ctx, alpha) < 1)
        throw FiltrationViolation(
            "pushforward arguments need filtration degree >= 1");
    std::vector<S> args;
    args.push_back(alpha);
    U out = F.maps[0](args);
    for (int n = 2; n <= F.cutoff(); ++n) {
        args.push_back(alpha);
        out += F.maps[n - 1](args).scaled(dgla_detail::inverse_factorial(n));
    }
    return out;
}

// Structure maps twisted by a Maurer-Cartan element,
//   F^a_n(g_1..g_n) = sum_k 1/k! F_{k+n}(a, ..., a, g_1..g_n).
template <class S, class U>
LInfMorphism<S, U> linf_twist(const LInfMorphism<S, U>& F, const S& alpha,
                              const MCContext<S>& ctx) {
    if (dgla_detail::filt_of(ctx, alpha) < 1)
        throw FiltrationViolation(
            "twisting elements need filtration degree >= 1");
    LInfMorphism<S, U> out;
    for (int n = 1; n <= F.cutoff(); ++n) {
        out.maps.push_back([F, alpha, n](const std::vector<S>& gs) {
            std::vector<S> args(gs.begin(), gs.end());
            U acc = F.maps[n - 1](args);
            for (int k = 1; k + n <= F.cutoff(); ++k) {
                args.insert(args.begin(), alpha);
                acc += F.maps[k + n - 1](args).scaled(
                    dgla_detail::inverse_factorial(k));
            }
            return acc;
        });
    }
    return out;
}

// The two standard carriers: multivector fields with the Schouten bracket and
// zero differential, and multidifferential cochains with the coboundary of
// the pointwise product and the operadic bracket.  Both are filtered by the
// lowest h-power; the bound follows the profile's truncation window.
MCContext<PolyVectorField> polyvector_context(const TruncationProfile& p);
MCContext<PolyDiffOp> cochain_context(const TruncationProfile& p);

int dgla_filtration_bound(const TruncationProfile& p);

}  // namespace starforge
