#include "starforge/fedosov.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "starforge/errors.hpp"

namespace starforge {

namespace {

std::uint16_t bit(int i) { return static_cast<std::uint16_t>(1u << (i - 1)); }

// --- series-matrix helpers --------------------------------------------------
// Same scheme as the form dictionaries: invert the constant block exactly,
// then peel off the rest with a Neumann tail.

using RMat = std::vector<std::vector<CRational>>;

RMat rmat_inverse(RMat m) {
    int d = static_cast<int>(m.size());
    RMat inv(d, std::vector<CRational>(d));
    for (int i = 0; i < d; ++i) inv[i][i] = CRational::one();
    for (int c = 0; c < d; ++c) {
        int p = c;
        while (p < d && m[p][c].is_zero()) ++p;
        if (p == d) throw NonInvertible("constant coefficient block is singular");
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

SeriesMatrix smat_zero(int d) { return SeriesMatrix(d, std::vector<HSeries>(d)); }

SeriesMatrix smat_identity(int d) {
    SeriesMatrix m = smat_zero(d);
    for (int i = 0; i < d; ++i) m[i][i] = HSeries::one();
    return m;
}

SeriesMatrix smat_mul(const SeriesMatrix& a, const SeriesMatrix& b,
                      const TruncationProfile& pr) {
    int d = static_cast<int>(a.size());
    SeriesMatrix out = smat_zero(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            HSeries s;
            for (int k = 0; k < d; ++k) s += a[i][k] * b[k][j];
            out[i][j] = reduce(s, pr);
        }
    return out;
}

SeriesMatrix smat_transpose(const SeriesMatrix& a) {
    int d = static_cast<int>(a.size());
    SeriesMatrix out = smat_zero(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out[i][j] = a[j][i];
    return out;
}

bool smat_is_zero(const SeriesMatrix& m) {
    for (const auto& row : m)
        for (const auto& e : row)
            if (!e.is_zero()) return false;
    return true;
}

SeriesMatrix smat_reduce(const SeriesMatrix& m, const TruncationProfile& pr) {
    SeriesMatrix out = m;
    for (auto& row : out)
        for (auto& e : row) e = reduce(e, pr);
    return out;
}

SeriesMatrix smat_scaled(const SeriesMatrix& m, const CRational& c) {
    SeriesMatrix out = m;
    for (auto& row : out)
        for (auto& e : row) e = e.scaled(c);
    return out;
}

SeriesMatrix smat_shifted(const SeriesMatrix& m, int dk) {
    SeriesMatrix out = m;
    for (auto& row : out)
        for (auto& e : row) e = e.shifted(dk);
    return out;
}

// Inverse for an invertible constant (h^0, x^0) block; every Neumann term
// beyond it gains combined (h, x) degree, so the tail closes in the window.
SeriesMatrix smat_inverse(const SeriesMatrix& m, const TruncationProfile& pr) {
    int d = static_cast<int>(m.size());
    RMat c(d, std::vector<CRational>(d));
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) c[i][j] = m[i][j].coeff(0).constant_term();
    RMat cinv = rmat_inverse(c);
    SeriesMatrix x = smat_zero(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (!cinv[i][j].is_zero()) x[i][j] = HSeries::constant(cinv[i][j]);
    SeriesMatrix t = smat_mul(x, m, pr);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            t[i][j] = -t[i][j];
            if (i == j) t[i][j] += HSeries::one();
        }
    SeriesMatrix acc = x;
    SeriesMatrix term = x;
    int guard = pr.hbar_order + pr.x_degree + 2;
    while (!smat_is_zero(term)) {
        if (--guard < 0) throw EngineError("matrix inverse series did not close");
        term = smat_mul(t, term, pr);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) acc[i][j] += term[i][j];
    }
    return smat_reduce(acc, pr);
}

SeriesMatrix smat_exp(const SeriesMatrix& n, const TruncationProfile& pr) {
    int d = static_cast<int>(n.size());
    SeriesMatrix acc = smat_identity(d);
    SeriesMatrix term = smat_identity(d);
    int guard = 4 * pr.hbar_order + 8;
    for (int t = 1;; ++t) {
        if (--guard < 0) throw EngineError("matrix exponential did not close");
        term = smat_scaled(smat_mul(term, n, pr), CRational(1, t));
        if (smat_is_zero(term)) break;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) acc[i][j] += term[i][j];
    }
    return acc;
}

// --- validation --------------------------------------------------------------

void check_matrix_dim(const SeriesMatrix& m, const TruncationProfile& pr,
                      const std::string& what) {
    if (static_cast<int>(m.size()) != pr.dim)
        throw ProfileError(what + " matrix does not match the profile dimension");
    for (const auto& row : m)
        if (static_cast<int>(row.size()) != pr.dim)
            throw ProfileError(what + " matrix is not square");
}

void check_antisymmetric(const SeriesMatrix& m, const TruncationProfile& pr,
                         const std::string& what) {
    int d = static_cast<int>(m.size());
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
            if (!reduce(m[i][j] + m[j][i], pr).is_zero())
                throw NotAntisymmetric(what + " matrix entry (" + std::to_string(i + 1) +
                                       "," + std::to_string(j + 1) +
                                       ") breaks antisymmetry");
}

void check_exponent(const SeriesMatrix& pi, const TruncationProfile& pr) {
    check_matrix_dim(pi, pr, "product exponent");
    check_antisymmetric(pi, pr, "product exponent");
    for (const auto& row : pi)
        for (const auto& e : row) {
            HSeries red = reduce(e, pr);
            if (!red.is_zero() && red.h_filtration() < 1)
                throw ZerothOrderViolation("product exponent entries must start at order h");
        }
}

void check_connection(const ConnectionData& c, const TruncationProfile& pr) {
    if (c.dim != pr.dim)
        throw ProfileError("connection dimension does not match the profile");
    if (c.gamma.size() !=
        static_cast<std::size_t>(c.dim) * c.dim * c.dim)
        throw ProfileError("connection coefficient table has the wrong size");
    for (int k = 1; k <= c.dim; ++k)
        for (int i = 1; i <= c.dim; ++i)
            for (int j = i + 1; j <= c.dim; ++j)
                if (!(c.christoffel(k, i, j) == c.christoffel(k, j, i)))
                    throw IncompatibleConnection(
                        "christoffel series must be symmetric in the lower indices");
    if (c.tail.empty()) return;
    if (static_cast<int>(c.tail.size()) != c.dim)
        throw ProfileError("connection tail needs one entry per dimension");
    for (const auto& t : c.tail) {
        if (t.is_zero()) continue;
        if (!t.is_dx_homogeneous(1))
            throw FiltrationViolation("connection tail entries must have dx-degree 1");
        for (const auto& [key, v] : t.terms)
            if (key.b.degree() < 2)
                throw FiltrationViolation("connection tail entries must have y-degree >= 2");
    }
}

// Covariant constancy of the product exponent, entry by entry.
void check_compatibility(const ConnectionData& c, const SeriesMatrix& m,
                         const TruncationProfile& pr) {
    int d = c.dim;
    for (int i = 1; i <= d; ++i)
        for (int p = 1; p <= d; ++p)
            for (int q = 1; q <= d; ++q) {
                HSeries res = m[p - 1][q - 1].dx(i);
                for (int l = 1; l <= d; ++l) {
                    res += c.christoffel(p, i, l) * m[l - 1][q - 1];
                    res += c.christoffel(q, i, l) * m[p - 1][l - 1];
                }
                if (!reduce(res, pr).is_zero())
                    throw IncompatibleConnection(
                        "connection does not preserve the product exponent at entry (" +
                        std::to_string(p) + "," + std::to_string(q) + "), direction " +
                        std::to_string(i));
            }
}

// --- small combinatorics -----------------------------------------------------

const WeylElement& memo_dy(std::map<MIdx, WeylElement>& memo, const MIdx& target) {
    auto it = memo.find(target);
    if (it != memo.end()) return it->second;
    for (int i = 0; i < kMaxDim; ++i) {
        if (target[i] == 0) continue;
        const WeylElement& par = memo_dy(memo, target.lowered(i));
        return memo.emplace(target, par.d_y(i + 1)).first->second;
    }
    return memo.at(target);
}

WeylElement dy_multi(const WeylElement& a, const MIdx& g) {
    WeylElement out = a;
    for (int i = 0; i < kMaxDim; ++i)
        for (int t = 0; t < g[i]; ++t) out = out.d_y(i + 1);
    return out;
}

CRational midx_binom(const MIdx& b, const MIdx& g) {
    CRational out = CRational::one();
    for (int i = 0; i < kMaxDim; ++i)
        for (long t = 0; t < g[i]; ++t) out = out * CRational(b[i] - t, t + 1);
    return out;
}

CRational midx_factorial(const MIdx& b) {
    CRational out = CRational::one();
    for (int i = 0; i < kMaxDim; ++i)
        for (long t = 2; t <= b[i]; ++t) out = out * CRational(t);
    return out;
}

MIdx midx_sub(const MIdx& b, const MIdx& g) {
    MIdx out = b;
    for (int i = 0; i < kMaxDim; ++i)
        out.e[i] = static_cast<std::uint8_t>(out.e[i] - g.e[i]);
    return out;
}

// All multi-indices in dim variables of total degree <= cap, degree ascending.
std::vector<MIdx> midx_up_to(int cap, int dim) {
    std::vector<MIdx> out;
    std::vector<MIdx> layer{MIdx{}};
    out.push_back(MIdx{});
    for (int t = 1; t <= cap; ++t) {
        std::vector<MIdx> next;
        for (const auto& m : layer)
            for (int i = 0; i < dim; ++i) next.push_back(m.bumped(i));
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
    }
    return out;
}

template <class F>
void for_each_subindex(const MIdx& b, int i, MIdx g, const F& f) {
    if (i == kMaxDim) {
        f(g);
        return;
    }
    for (int v = 0; v <= b[i]; ++v) {
        g.e[i] = static_cast<std::uint8_t>(v);
        for_each_subindex(b, i + 1, g, f);
    }
}

// --- fiberwise product cores ---------------------------------------------------

// a1 exp(pi^{kl} <-d/dy^k ->d/dy^l) a2 through the coefficient ladder
// C^{m+1}_{a+e_k, b+e_l} += C^m_{ab} pi^{kl}.  Entries of pi start at order h,
// so every ladder level gains one power of h and the loop stops by itself.
// Levels below min_level are skipped in the output (their ladder entries are
// still walked); brackets use min_level 1, since the plain graded product
// drops out of every commutator identically.  Operand derivatives are
// trimmed to the h-budget left at each level.
WeylElement dia_core(const WeylElement& a1, const WeylElement& a2,
                     const SeriesMatrix& p, const TruncationProfile& pr,
                     int min_level = 0) {
    const int d = static_cast<int>(p.size());
    std::map<MIdx, WeylElement> da, db;
    da.emplace(MIdx{}, reduce(a1, pr));
    db.emplace(MIdx{}, reduce(a2, pr));
    std::map<std::pair<MIdx, MIdx>, HSeries> ladder;
    ladder.emplace(std::make_pair(MIdx{}, MIdx{}), HSeries::one());
    WeylElement out;
    CRational invfact = CRational::one();
    for (int m = 0; !ladder.empty(); ++m) {
        if (m > 0) {
            invfact = invfact * CRational(1, m);
            TruncationProfile budget(pr.hbar_order - m, pr.x_degree, pr.y_degree, pr.dim);
            for (auto& [mi, e] : da) e = reduce(e, budget);
            for (auto& [mi, e] : db) e = reduce(e, budget);
        }
        std::map<std::pair<MIdx, MIdx>, HSeries> next;
        for (const auto& [ab, c] : ladder) {
            const WeylElement& u = memo_dy(da, ab.first);
            const WeylElement& v = memo_dy(db, ab.second);
            if (m >= min_level && !u.is_zero() && !v.is_zero())
                out += reduce(WeylElement::from_hseries(c) * u * v, pr).scaled(invfact);
            for (int k = 1; k <= d; ++k) {
                if (memo_dy(da, ab.first.bumped(k - 1)).is_zero()) continue;
                for (int l = 1; l <= d; ++l) {
                    if (p[k - 1][l - 1].is_zero()) continue;
                    if (memo_dy(db, ab.second.bumped(l - 1)).is_zero()) continue;
                    HSeries nc = reduce(c * p[k - 1][l - 1], pr);
                    if (nc.is_zero()) continue;
                    next[std::make_pair(ab.first.bumped(k - 1), ab.second.bumped(l - 1))] += nc;
                }
            }
        }
        for (auto it = next.begin(); it != next.end();)
            it = it->second.is_zero() ? next.erase(it) : std::next(it);
        ladder = std::move(next);
    }
    return out;
}

WeylElement poisson_core(const WeylElement& a1, const WeylElement& a2,
                         const SeriesMatrix& p, const TruncationProfile& pr) {
    const int d = static_cast<int>(p.size());
    WeylElement out;
    for (int k = 1; k <= d; ++k) {
        WeylElement uk = a1.d_y(k);
        if (uk.is_zero()) continue;
        for (int l = 1; l <= d; ++l) {
            if (p[k - 1][l - 1].is_zero()) continue;
            WeylElement vl = a2.d_y(l);
            if (vl.is_zero()) continue;
            out += WeylElement::from_hseries(p[k - 1][l - 1]) * uk * vl;
        }
    }
    return reduce(out, pr).scaled(CRational(2));
}

std::map<int, WeylElement> dx_layers(const WeylElement& a) {
    std::map<int, WeylElement> parts;
    for (const auto& [key, c] : a.terms) parts[key.s.size()].add_term(key, c);
    return parts;
}

WeylElement dia_bracket_core(const WeylElement& a1, const WeylElement& a2,
                             const SeriesMatrix& p, const TruncationProfile& pr) {
    WeylElement out;
    for (const auto& [q1, u] : dx_layers(a1))
        for (const auto& [q2, v] : dx_layers(a2)) {
            out += dia_core(u, v, p, pr, 1);
            WeylElement rev = dia_core(v, u, p, pr, 1);
            if ((q1 * q2) % 2)
                out += rev;
            else
                out -= rev;
        }
    return out;
}

WeylElement mode_bracket(FedosovMode mode, const WeylElement& u, const WeylElement& v,
                         const SeriesMatrix& p, const TruncationProfile& pr) {
    if (mode == FedosovMode::quantum) return dia_bracket_core(u, v, p, pr);
    return poisson_core(u, v, p, pr);
}

// --- connection cores ----------------------------------------------------------

WeylElement nabla_core(const WeylElement& a, const ConnectionData& c,
                       const TruncationProfile& pr) {
    std::vector<WeylElement> dys(static_cast<std::size_t>(c.dim) + 1);
    for (int k = 1; k <= c.dim; ++k) dys[k] = a.d_y(k);
    WeylElement out;
    for (int i = 1; i <= c.dim; ++i) {
        WeylElement vert = a.d_x(i);
        for (int k = 1; k <= c.dim; ++k) {
            if (dys[k].is_zero()) continue;
            for (int j = 1; j <= c.dim; ++j) {
                const HSeries& g = c.christoffel(k, i, j);
                if (g.is_zero()) continue;
                vert -= WeylElement::from_hseries(g) * WeylElement::y_var(j) * dys[k];
            }
        }
        out += vert.wedge_dx(i);
    }
    return reduce(out, pr);
}

WeylElement tail_core(const ConnectionData& c, const WeylElement& a,
                      const TruncationProfile& pr) {
    WeylElement out;
    if (c.tail.empty()) return out;
    for (int j = 1; j <= c.dim; ++j) {
        if (c.tail[j - 1].is_zero()) continue;
        WeylElement dj = a.d_y(j);
        if (dj.is_zero()) continue;
        out += c.tail[j - 1] * dj;
    }
    return reduce(out, pr);
}

// Commutator curvature of the connection with both lower indices, lowered
// with w and normalized against the (h/2) pairing.
WeylElement curvature_core(const ConnectionData& c, const SeriesMatrix& w,
                           const TruncationProfile& pr) {
    const int d = c.dim;
    auto fidx = [d](int l, int i, int j, int q) {
        return ((static_cast<std::size_t>(l - 1) * d + (i - 1)) * d + (j - 1)) * d +
               (q - 1);
    };
    std::vector<HSeries> f(static_cast<std::size_t>(d) * d * d * d);
    for (int l = 1; l <= d; ++l)
        for (int i = 1; i <= d; ++i)
            for (int j = 1; j <= d; ++j)
                for (int q = 1; q <= d; ++q) {
                    HSeries s = c.christoffel(l, i, q).dx(j) - c.christoffel(l, j, q).dx(i);
                    for (int m = 1; m <= d; ++m) {
                        s += c.christoffel(l, j, m) * c.christoffel(m, i, q);
                        s -= c.christoffel(l, i, m) * c.christoffel(m, j, q);
                    }
                    f[fidx(l, i, j, q)] = reduce(s, pr);
                }
    WeylElement out;
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j) {
            if (j == i) continue;
            for (int k = 1; k <= d; ++k)
                for (int q = 1; q <= d; ++q) {
                    HSeries acc;
                    for (int l = 1; l <= d; ++l) {
                        const HSeries& wkl = w[k - 1][l - 1];
                        if (wkl.is_zero()) continue;
                        acc += wkl * f[fidx(l, i, j, q)];
                    }
                    acc = reduce(acc, pr);
                    if (acc.is_zero()) continue;
                    WeylElement t = WeylElement::from_hseries(acc) *
                                    WeylElement::y_var(k) * WeylElement::y_var(q);
                    out += t.wedge_dx(j).wedge_dx(i).scaled(CRational(-1, 4));
                }
        }
    return reduce(out, pr);
}

WeylElement theta_element(const SeriesMatrix& w) {
    int d = static_cast<int>(w.size());
    WeylElement out;
    for (int i = 1; i <= d; ++i)
        for (int j = 1; j <= d; ++j) {
            if (w[i - 1][j - 1].is_zero()) continue;
            out += (WeylElement::from_hseries(w[i - 1][j - 1]) * WeylElement::y_var(j))
                       .wedge_dx(i);
        }
    return out;
}

WeylElement form_element(const SeriesMatrix& w) {
    int d = static_cast<int>(w.size());
    WeylElement out;
    for (int i = 1; i <= d; ++i)
        for (int j = i + 1; j <= d; ++j) {
            if (w[i - 1][j - 1].is_zero()) continue;
            out += WeylElement::from_hseries(w[i - 1][j - 1]).wedge_dx(j).wedge_dx(i);
        }
    return out;
}

int iteration_guard(const TruncationProfile& wp) {
    return wp.y_degree + 2 * wp.hbar_order + 4;
}

// --- cochain cores ---------------------------------------------------------------

FiberCochain cochain_delta_inv(const FiberCochain& p) {
    FiberCochain out(p.arity);
    for (const auto& [key, v] : p.terms) {
        WeylElement e = delta_inv(WeylElement::monomial(key.first, v));
        for (const auto& [k2, v2] : e.terms) out.add_term(k2, key.second, v2);
    }
    return out;
}

FiberCochain cochain_nabla(const FiberCochain& p, const ConnectionData& c,
                           const TruncationProfile& pr) {
    FiberCochain out(p.arity);
    for (const auto& [key, v] : p.terms) {
        WeylElement mono = WeylElement::monomial(key.first, v);
        WeylElement cov = nabla_core(mono, c, pr);
        for (const auto& [k2, v2] : cov.terms) out.add_term(k2, key.second, v2);
        for (int s = 0; s < p.arity; ++s) {
            const MIdx& beta = key.second[s];
            for (int j = 1; j <= c.dim; ++j) {
                int bj = beta[j - 1];
                if (bj == 0) continue;
                for (int i = 1; i <= c.dim; ++i)
                    for (int k = 1; k <= c.dim; ++k) {
                        const HSeries& g = c.christoffel(k, i, j);
                        if (g.is_zero()) continue;
                        WeylElement e = reduce((WeylElement::from_hseries(g) * mono)
                                                   .wedge_dx(i)
                                                   .scaled(CRational(bj)),
                                               pr);
                        if (e.is_zero()) continue;
                        std::vector<MIdx> slots = key.second;
                        slots[s] = beta.lowered(j - 1).bumped(k - 1);
                        for (const auto& [k2, v2] : e.terms) out.add_term(k2, slots, v2);
                    }
            }
        }
    }
    return reduce(out, pr);
}

FiberCochain cochain_tail_bracket(const FiberCochain& p, const ConnectionData& c,
                                  const TruncationProfile& pr) {
    FiberCochain out(p.arity);
    if (c.tail.empty()) return out;
    for (const auto& [key, v] : p.terms) {
        if (!key.first.s.empty())
            throw EngineError("tail bracket needs dx-degree-0 cochain coefficients");
        WeylElement mono = WeylElement::monomial(key.first, v);
        for (int j = 1; j <= c.dim; ++j) {
            if (c.tail[j - 1].is_zero()) continue;
            WeylElement e = reduce(c.tail[j - 1] * mono.d_y(j), pr);
            for (const auto& [k2, v2] : e.terms) out.add_term(k2, key.second, v2);
        }
        for (int s = 0; s < p.arity; ++s) {
            const MIdx& beta = key.second[s];
            if (beta.is_zero()) continue;
            for_each_subindex(beta, 0, MIdx{}, [&](const MIdx& g) {
                if (g.is_zero()) return;
                CRational bc = midx_binom(beta, g);
                for (int k = 1; k <= c.dim; ++k) {
                    if (c.tail[k - 1].is_zero()) continue;
                    WeylElement dv = dy_multi(c.tail[k - 1], g);
                    if (dv.is_zero()) continue;
                    WeylElement e = reduce((mono * dv).scaled(-bc), pr);
                    if (e.is_zero()) continue;
                    std::vector<MIdx> slots = key.second;
                    slots[s] = midx_sub(beta, g).bumped(k - 1);
                    for (const auto& [k2, v2] : e.terms) out.add_term(k2, slots, v2);
                }
            });
        }
    }
    return reduce(out, pr);
}

void add_flat_terms(FiberCochain& p, const std::vector<MIdx>& slots, const HSeries& s) {
    for (const auto& [k, poly] : s.coeffs)
        for (const auto& [a, v] : poly.terms)
            p.add_term(WeylKey{k, a, MIdx{}, DxMask{}}, slots, v);
}

// Slot tuples for the interpolation grids, total degree ascending.
std::vector<std::vector<MIdx>> slot_tuples(int arity, int cap, int dim) {
    std::vector<MIdx> degs = midx_up_to(cap, dim);
    std::vector<std::vector<MIdx>> out{{}};
    for (int s = 0; s < arity; ++s) {
        std::vector<std::vector<MIdx>> next;
        next.reserve(out.size() * degs.size());
        for (const auto& tup : out)
            for (const auto& m : degs) {
                auto n = tup;
                n.push_back(m);
                next.push_back(std::move(n));
            }
        out = std::move(next);
    }
    auto total = [](const std::vector<MIdx>& tup) {
        int t = 0;
        for (const auto& m : tup) t += m.degree();
        return t;
    };
    std::stable_sort(out.begin(), out.end(),
                     [&](const auto& a, const auto& b) { return total(a) < total(b); });
    return out;
}

}  // namespace

// --- contracting homotopy ---------------------------------------------------

WeylElement delta(const WeylElement& a) {
    WeylElement out;
    for (int i = 1; i <= kMaxDim; ++i) out += a.d_y(i).wedge_dx(i);
    return out;
}

WeylElement delta_inv(const WeylElement& a) {
    WeylElement out;
    for (const auto& [key, c] : a.terms) {
        int q = key.s.size();
        if (q == 0) continue;
        int p = key.b.degree();
        WeylElement t = WeylElement::monomial(key, c * CRational(1, p + q));
        for (int k = 1; k <= kMaxDim; ++k) {
            if (!key.s.has(k)) continue;
            out += WeylElement::y_var(k) * t.contract_dx(k);
        }
    }
    return out;
}

WeylElement sigma(const WeylElement& a) {
    WeylElement out;
    for (const auto& [key, c] : a.terms)
        if (key.b.is_zero() && key.s.empty()) out.add_term(key, c);
    return out;
}

// --- fiberwise products -------------------------------------------------------

WeylElement diamond(const WeylElement& a1, const WeylElement& a2,
                    const SeriesMatrix& pi, const TruncationProfile& pr) {
    check_exponent(pi, pr);
    return dia_core(a1, a2, smat_reduce(pi, pr), pr);
}

WeylElement diamond_bracket(const WeylElement& a1, const WeylElement& a2,
                            const SeriesMatrix& pi, const TruncationProfile& pr) {
    check_exponent(pi, pr);
    return dia_bracket_core(a1, a2, smat_reduce(pi, pr), pr);
}

WeylElement fiber_poisson(const WeylElement& a1, const WeylElement& a2,
                          const SeriesMatrix& pi, const TruncationProfile& pr) {
    check_matrix_dim(pi, pr, "bracket exponent");
    check_antisymmetric(pi, pr, "bracket exponent");
    return poisson_core(a1, a2, smat_reduce(pi, pr), pr);
}

SeriesMatrix leading_matrix(const SeriesMatrix& pi) {
    int d = static_cast<int>(pi.size());
    SeriesMatrix out = smat_zero(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            HSeries lead = HSeries::from_poly(pi[i][j].coeff(1), 1);
            if (!lead.is_zero()) out[i][j] = lead;
        }
    return out;
}

SeriesMatrix pi_matrix_from_omega(const SeriesMatrix& w, const TruncationProfile& pr) {
    check_matrix_dim(w, pr, "symplectic");
    check_antisymmetric(w, pr, "symplectic");
    SeriesMatrix inv;
    try {
        inv = smat_inverse(smat_reduce(w, pr), pr);
    } catch (const NonInvertible&) {
        throw DegenerateOmega("symplectic series is singular at the origin");
    }
    int d = pr.dim;
    SeriesMatrix out = smat_zero(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            out[i][j] = reduce(inv[i][j].scaled(CRational(1, 2)).shifted(1), pr);
    return out;
}

SeriesMatrix omega_matrix_from_field(const PolyVectorField& pi,
                                     const TruncationProfile& pr) {
    if (pi.arity != 2) throw ArityMismatch("symplectic bridge needs a bivector");
    int d = pr.dim;
    SeriesMatrix g = smat_zero(d);
    for (int i = 1; i <= d; ++i)
        for (int j = i + 1; j <= d; ++j) {
            const HSeries& c = pi.component(static_cast<std::uint16_t>(bit(i) | bit(j)));
            if (c.is_zero()) continue;
            if (c.h_filtration() < 1)
                throw ZerothOrderViolation("bivector components must start at order h");
            HSeries lowered;
            for (const auto& [k, p] : c.coeffs) lowered.add_term(k - 1, p);
            g[i - 1][j - 1] = reduce(lowered, pr);
            g[j - 1][i - 1] = -g[i - 1][j - 1];
        }
    SeriesMatrix ginv;
    try {
        ginv = smat_inverse(g, pr);
    } catch (const NonInvertible&) {
        throw DegeneratePi1("bivector leading matrix is singular at the origin");
    }
    return smat_reduce(smat_scaled(ginv, CRational(1, 2)), pr);
}

// --- connections ----------------------------------------------------------------

ConnectionData::ConnectionData(int d)
    : dim(d), gamma(static_cast<std::size_t>(d) * d * d) {}

HSeries& ConnectionData::christoffel(int k, int i, int j) {
    return gamma[(static_cast<std::size_t>(k - 1) * dim + (i - 1)) * dim + (j - 1)];
}

const HSeries& ConnectionData::christoffel(int k, int i, int j) const {
    return gamma[(static_cast<std::size_t>(k - 1) * dim + (i - 1)) * dim + (j - 1)];
}

void ConnectionData::set_christoffel(int k, int i, int j, const HSeries& s) {
    christoffel(k, i, j) = s;
    christoffel(k, j, i) = s;
}

WeylElement nabla(const WeylElement& a, const ConnectionData& c,
                  const TruncationProfile& pr) {
    check_connection(c, pr);
    return nabla_core(a, c, pr);
}

WeylElement tail_action(const ConnectionData& c, const WeylElement& a,
                        const TruncationProfile& pr) {
    check_connection(c, pr);
    return tail_core(c, a, pr);
}

WeylElement curvature(const ConnectionData& c, const SeriesMatrix& w,
                      const TruncationProfile& pr) {
    check_connection(c, pr);
    check_matrix_dim(w, pr, "symplectic");
    check_antisymmetric(w, pr, "symplectic");
    SeriesMatrix m = pi_matrix_from_omega(w, pr);
    check_compatibility(c, m, pr);
    return curvature_core(c, smat_reduce(w, pr), pr);
}

// --- flatness recursion -----------------------------------------------------------

FedosovState fedosov_recursion(const ConnectionData& c, const SeriesMatrix& w,
                               FedosovMode mode, const TruncationProfile& pr) {
    TruncationProfile wp = work_profile(pr);
    check_connection(c, wp);
    check_matrix_dim(w, wp, "symplectic");
    check_antisymmetric(w, wp, "symplectic");
    FedosovState st;
    st.mode = mode;
    st.conn = c;
    st.target = pr;
    st.work = wp;
    st.w = smat_reduce(w, wp);
    st.pi = pi_matrix_from_omega(st.w, wp);
    check_compatibility(c, st.pi, wp);
    WeylElement big_r = curvature_core(c, st.w, wp);
    WeylElement cur, nab, sq;
    int guard = iteration_guard(wp);
    for (;;) {
        if (--guard < 0) throw NoConvergence("flatness recursion did not reach a fixed point");
        WeylElement rhs = big_r + nab;
        if (!sq.is_zero()) rhs += sq.div_h(1).scaled(CRational(1, 2));
        WeylElement nxt = delta_inv(reduce(rhs, wp));
        WeylElement inc = nxt - cur;
        if (inc.is_zero()) break;
        nab += nabla_core(inc, c, wp);
        sq += mode_bracket(mode, cur, inc, st.pi, wp);
        sq += mode_bracket(mode, inc, cur, st.pi, wp);
        sq += mode_bracket(mode, inc, inc, st.pi, wp);
        cur = std::move(nxt);
    }
    st.r = cur;
    if (!cur.is_zero() && filtration_degree(cur) < 3)
        throw FiltrationViolation("flatness solution dips below filtration degree 3");
    st.b = reduce(cur - theta_element(st.w), wp);
    return st;
}

WeylElement flatness_certificate(const FedosovState& st) {
    const TruncationProfile& wp = st.work;
    WeylElement res = curvature_core(st.conn, st.w, wp) + nabla_core(st.r, st.conn, wp);
    res -= delta(st.r);
    WeylElement sq = mode_bracket(st.mode, st.r, st.r, st.pi, wp);
    res += sq.div_h(1).scaled(CRational(1, 2));
    return reduce(res, st.target);
}

WeylElement state_differential(const FedosovState& st, const WeylElement& a) {
    const TruncationProfile& wp = st.work;
    WeylElement aw = reduce(a, wp);
    WeylElement out = nabla_core(aw, st.conn, wp) - delta(aw);
    out += mode_bracket(st.mode, st.r, aw, st.pi, wp).div_h(1);
    return reduce(out, wp);
}

WeylElement class_residual(const FedosovState& st) {
    const TruncationProfile& wp = st.work;
    WeylElement res = curvature_core(st.conn, st.w, wp) + nabla_core(st.b, st.conn, wp);
    WeylElement sq = mode_bracket(st.mode, st.b, st.b, st.pi, wp);
    res += sq.div_h(1).scaled(CRational(1, 2));
    res += form_element(st.w);
    return reduce(res, st.target);
}

// --- flat-section lifts --------------------------------------------------------

WeylElement flat_lift(const FedosovState& st, const HSeries& f) {
    const TruncationProfile& wp = st.work;
    WeylElement base = WeylElement::from_hseries(reduce(f, st.target));
    WeylElement cur = base;
    WeylElement nab = nabla_core(cur, st.conn, wp);
    WeylElement br = mode_bracket(st.mode, st.r, cur, st.pi, wp);
    int guard = iteration_guard(wp);
    for (;;) {
        if (--guard < 0) throw NoConvergence("flat lift did not reach a fixed point");
        WeylElement nxt = base + delta_inv(reduce(nab + br.div_h(1), wp));
        WeylElement inc = nxt - cur;
        if (inc.is_zero()) break;
        nab += nabla_core(inc, st.conn, wp);
        br += mode_bracket(st.mode, st.r, inc, st.pi, wp);
        cur = std::move(nxt);
    }
    return cur;
}

WeylElement geometric_lift(const ConnectionData& c, const HSeries& f,
                           const TruncationProfile& pr) {
    TruncationProfile wp = work_profile(pr);
    check_connection(c, wp);
    WeylElement base = WeylElement::from_hseries(reduce(f, pr));
    WeylElement cur = base;
    WeylElement rhs = nabla_core(cur, c, wp) + tail_core(c, cur, wp);
    int guard = iteration_guard(wp);
    for (;;) {
        if (--guard < 0) throw NoConvergence("geometric lift did not reach a fixed point");
        WeylElement nxt = base + delta_inv(reduce(rhs, wp));
        WeylElement inc = nxt - cur;
        if (inc.is_zero()) break;
        rhs += nabla_core(inc, c, wp) + tail_core(c, inc, wp);
        cur = std::move(nxt);
    }
    return cur;
}

WeylElement geometric_differential(const ConnectionData& c, const WeylElement& a,
                                   const TruncationProfile& pr) {
    TruncationProfile wp = work_profile(pr);
    check_connection(c, wp);
    WeylElement aw = reduce(a, wp);
    return reduce(nabla_core(aw, c, wp) - delta(aw) + tail_core(c, aw, wp), wp);
}

// --- fiberwise cochains -----------------------------------------------------------

FiberCochain FiberCochain::from_operator(const PolyDiffOp& p) {
    FiberCochain out(p.arity);
    for (const auto& [slots, c] : p.terms)
        for (const auto& [k, poly] : c.coeffs)
            for (const auto& [a, v] : poly.terms)
                out.add_term(WeylKey{k, a, MIdx{}, DxMask{}}, slots, v);
    return out;
}

void FiberCochain::add_term(const WeylKey& c, const std::vector<MIdx>& slots,
                            const CRational& v) {
    if (static_cast<int>(slots.size()) != arity)
        throw ArityMismatch("cochain term has the wrong slot count");
    if (v.is_zero()) return;
    auto key = std::make_pair(c, slots);
    auto it = terms.find(key);
    if (it == terms.end()) {
        terms.emplace(std::move(key), v);
        return;
    }
    it->second += v;
    if (it->second.is_zero()) terms.erase(it);
}

bool FiberCochain::is_delta_flat() const {
    for (const auto& [key, v] : terms)
        if (!key.first.b.is_zero() || !key.first.s.empty()) return false;
    return true;
}

FiberCochain FiberCochain::operator-() const {
    FiberCochain out(arity);
    for (const auto& [key, v] : terms) out.terms.emplace(key, -v);
    return out;
}

FiberCochain& FiberCochain::operator+=(const FiberCochain& o) {
    if (arity != o.arity) throw ArityMismatch("cochain sum needs equal arities");
    for (const auto& [key, v] : o.terms) add_term(key.first, key.second, v);
    return *this;
}

FiberCochain& FiberCochain::operator-=(const FiberCochain& o) {
    if (arity != o.arity) throw ArityMismatch("cochain sum needs equal arities");
    for (const auto& [key, v] : o.terms) add_term(key.first, key.second, -v);
    return *this;
}

std::string FiberCochain::str(int dim) const {
    if (terms.empty()) return "0";
    std::string out;
    for (const auto& [key, v] : terms) {
        if (!out.empty()) out += " + ";
        out += WeylElement::monomial(key.first, v).str(dim);
        for (const auto& m : key.second) out += " dy^" + m.str(dim);
    }
    return out;
}

FiberCochain reduce(const FiberCochain& p, const TruncationProfile& pr) {
    FiberCochain out(p.arity);
    for (const auto& [key, v] : p.terms) {
        const WeylKey& c = key.first;
        if (c.k > pr.hbar_order || c.a.degree() > pr.x_degree ||
            c.b.degree() > pr.y_degree)
            continue;
        out.add_term(c, key.second, v);
    }
    return out;
}

WeylElement apply_cochain(const FiberCochain& p, const std::vector<WeylElement>& args,
                          const TruncationProfile& pr) {
    if (static_cast<int>(args.size()) != p.arity)
        throw ArityMismatch("cochain of arity " + std::to_string(p.arity) + " applied to " +
                            std::to_string(args.size()) + " arguments");
    std::vector<std::map<MIdx, WeylElement>> memo(args.size());
    for (std::size_t s = 0; s < args.size(); ++s)
        memo[s].emplace(MIdx{}, reduce(args[s], pr));
    WeylElement out;
    for (const auto& [key, v] : p.terms) {
        WeylElement t = WeylElement::monomial(key.first, v);
        for (std::size_t s = 0; s < args.size() && !t.is_zero(); ++s)
            t = t * memo_dy(memo[s], key.second[s]);
        out += reduce(t, pr);
    }
    return reduce(out, pr);
}

FiberCochain lift_cochain(const FiberCochain& p, const ConnectionData& c,
                          const TruncationProfile& pr) {
    if (!p.is_delta_flat())
        throw NotDeltaFlat("cochain lift needs y- and dx-free coefficients");
    TruncationProfile wp = work_profile(pr);
    check_connection(c, wp);
    FiberCochain base = reduce(p, pr);
    FiberCochain cur = base;
    FiberCochain rhs = cochain_nabla(cur, c, wp);
    rhs += cochain_tail_bracket(cur, c, wp);
    int guard = iteration_guard(wp);
    for (;;) {
        if (--guard < 0) throw NoConvergence("cochain lift did not reach a fixed point");
        FiberCochain nxt = base + cochain_delta_inv(reduce(rhs, wp));
        FiberCochain inc = nxt - cur;
        if (inc.is_zero()) break;
        rhs += cochain_nabla(inc, c, wp);
        rhs += cochain_tail_bracket(inc, c, wp);
        cur = std::move(nxt);
    }
    return cur;
}

FiberCochain lift_cochain(const PolyDiffOp& p, const ConnectionData& c,
                          const TruncationProfile& pr) {
    return lift_cochain(FiberCochain::from_operator(p), c, pr);
}

HSeries nu_eval(const FiberCochain& p, const std::vector<HSeries>& args,
                const ConnectionData& c, const TruncationProfile& pr) {
    if (static_cast<int>(args.size()) != p.arity)
        throw ArityMismatch("evaluation of an arity-" + std::to_string(p.arity) +
                            " cochain on " + std::to_string(args.size()) + " arguments");
    TruncationProfile wp = work_profile(pr);
    std::vector<WeylElement> lifts;
    lifts.reserve(args.size());
    for (const auto& f : args) lifts.push_back(geometric_lift(c, f, pr));
    return reduce(apply_cochain(p, lifts, wp).scalar_part(), pr);
}

PolyDiffOp descend_cochain(const FiberCochain& p, const ConnectionData& c,
                           const TruncationProfile& pr) {
    check_connection(c, work_profile(pr));
    const TruncationProfile wp = work_profile(pr);
    std::map<MIdx, WeylElement> lift_memo;
    auto lift_of = [&](const MIdx& b) -> const WeylElement& {
        auto it = lift_memo.find(b);
        if (it == lift_memo.end())
            it = lift_memo
                     .emplace(b, geometric_lift(
                                     c, HSeries::from_poly(TruncPoly::monomial(b, CRational::one())),
                                     pr))
                     .first;
        return it->second;
    };
    PolyDiffOp out(p.arity);
    for (const auto& tup : slot_tuples(p.arity, pr.x_degree, pr.dim)) {
        std::vector<WeylElement> lifts;
        std::vector<HSeries> margs;
        CRational fact = CRational::one();
        for (const auto& b : tup) {
            lifts.push_back(lift_of(b));
            margs.push_back(HSeries::from_poly(TruncPoly::monomial(b, CRational::one())));
            fact = fact * midx_factorial(b);
        }
        HSeries lhs = reduce(apply_cochain(p, lifts, wp).scalar_part(), pr);
        HSeries rhs = reduce(starforge::apply(out, margs), pr);
        HSeries q = reduce((lhs - rhs).scaled(fact.inverse()), pr);
        if (!q.is_zero()) out.add_term(tup, q);
    }
    return out;
}

FiberCochain ascend_operator(const PolyDiffOp& q, const ConnectionData& c,
                             const TruncationProfile& pr) {
    check_connection(c, work_profile(pr));
    PolyDiffOp want = reduce(q, pr);
    FiberCochain out(q.arity);
    PolyDiffOp defect = want;
    int guard = q.arity * pr.x_degree + 2;
    while (!defect.is_zero()) {
        if (--guard < 0) throw NoConvergence("operator ascent did not close");
        out += FiberCochain::from_operator(defect);
        defect = reduce(want - descend_cochain(out, c, pr), pr);
    }
    return out;
}

// --- star products ------------------------------------------------------------------

HSeries star_modified(const FedosovState& st, const HSeries& f1, const HSeries& f2) {
    if (st.mode != FedosovMode::quantum)
        throw EngineError("star products need a quantum-mode state");
    WeylElement t1 = flat_lift(st, f1);
    WeylElement t2 = flat_lift(st, f2);
    return reduce(dia_core(t1, t2, st.pi, st.work).scalar_part(), st.target);
}

namespace {

// exp(sgn h^{m-1} X) with X = chi^i_j y^j d/dy^i; X preserves the y-degree
// and the h-shift raises the order, so the series stops by itself.
WeylElement stage_apply(const WeylElement& a, const SeriesMatrix& chi, int m, int sgn,
                        const TruncationProfile& pr) {
    const int d = static_cast<int>(chi.size());
    WeylElement out = reduce(a, pr);
    WeylElement term = out;
    int guard = 4 * pr.hbar_order + 8;
    for (int t = 1;; ++t) {
        if (--guard < 0) throw EngineError("frame stage series did not close");
        WeylElement nt;
        for (int i = 1; i <= d; ++i) {
            WeylElement di = term.d_y(i);
            if (di.is_zero()) continue;
            for (int j = 1; j <= d; ++j) {
                if (chi[i - 1][j - 1].is_zero()) continue;
                nt += WeylElement::from_hseries(chi[i - 1][j - 1]) *
                      WeylElement::y_var(j) * di;
            }
        }
        nt = reduce(nt.shift_h(m - 1).scaled(CRational(sgn, t)), pr);
        if (nt.is_zero()) break;
        out += nt;
        term = std::move(nt);
    }
    return out;
}

}  // namespace

OriginalFrame original_frame(const FedosovState& st) {
    if (st.mode != FedosovMode::quantum)
        throw EngineError("the original frame needs a quantum-mode state");
    const TruncationProfile& wp = st.work;
    const int d = static_cast<int>(st.pi.size());
    SeriesMatrix m1 = smat_zero(d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            HSeries lead = HSeries::from_poly(st.pi[i][j].coeff(1), 0);
            if (!lead.is_zero()) m1[i][j] = lead;
        }
    SeriesMatrix m1inv;
    try {
        m1inv = smat_inverse(m1, wp);
    } catch (const NonInvertible&) {
        throw DegeneratePi1("leading exponent matrix is singular at the origin");
    }
    OriginalFrame of;
    of.state = st;
    of.pi_flat = smat_shifted(m1, 1);
    SeriesMatrix cur = st.pi;
    for (int m = 2; m <= wp.hbar_order; ++m) {
        SeriesMatrix am = smat_zero(d);
        bool nz = false;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                HSeries e = HSeries::from_poly(cur[i][j].coeff(m), 0);
                if (!e.is_zero()) {
                    am[i][j] = e;
                    nz = true;
                }
            }
        if (!nz) continue;
        SeriesMatrix chi = smat_scaled(smat_mul(m1inv, am, wp), CRational(1, 2));
        of.stages.emplace_back(m, chi);
        SeriesMatrix einv = smat_exp(smat_shifted(smat_scaled(chi, CRational(-1)), m - 1), wp);
        cur = smat_mul(smat_transpose(einv), smat_mul(cur, einv, wp), wp);
    }
    if (!(smat_reduce(cur, wp) == of.pi_flat))
        throw EngineError("frame construction failed to flatten the product exponent");
    of.pb = frame_apply(of, st.b);
    of.rf = reduce(of.pb + theta_element(st.w), wp);
    return of;
}

WeylElement frame_apply(const OriginalFrame& of, const WeylElement& a) {
    WeylElement out = reduce(a, of.state.work);
    for (const auto& [m, chi] : of.stages)
        out = stage_apply(out, chi, m, 1, of.state.work);
    return out;
}

WeylElement frame_apply_inverse(const OriginalFrame& of, const WeylElement& a) {
    WeylElement out = reduce(a, of.state.work);
    for (auto it = of.stages.rbegin(); it != of.stages.rend(); ++it)
        out = stage_apply(out, it->second, it->first, -1, of.state.work);
    return out;
}

WeylElement nabla_zero(const OriginalFrame& of, const WeylElement& a) {
    return frame_apply(
        of, nabla_core(frame_apply_inverse(of, a), of.state.conn, of.state.work));
}

WeylElement original_differential(const OriginalFrame& of, const WeylElement& a) {
    const TruncationProfile& wp = of.state.work;
    WeylElement aw = reduce(a, wp);
    WeylElement out = nabla_zero(of, aw);
    out += dia_bracket_core(of.pb, aw, of.pi_flat, wp).div_h(1);
    return reduce(out, wp);
}

WeylElement original_lift(const OriginalFrame& of, const HSeries& f) {
    return frame_apply(of, flat_lift(of.state, f));
}

WeylElement original_class_residual(const OriginalFrame& of) {
    const TruncationProfile& wp = of.state.work;
    WeylElement res = frame_apply(of, curvature_core(of.state.conn, of.state.w, wp));
    res += nabla_zero(of, of.pb);
    WeylElement sq = dia_bracket_core(of.pb, of.pb, of.pi_flat, wp);
    res += sq.div_h(1).scaled(CRational(1, 2));
    res += form_element(of.state.w);
    return reduce(res, of.state.target);
}

HSeries star_original(const OriginalFrame& of, const HSeries& f1, const HSeries& f2) {
    const TruncationProfile& wp = of.state.work;
    WeylElement t1 = original_lift(of, f1);
    WeylElement t2 = original_lift(of, f2);
    HSeries s = reduce(dia_core(t1, t2, of.pi_flat, wp).scalar_part(), of.state.target);
    HSeries sm = star_modified(of.state, f1, f2);
    if (!(s == sm)) throw EngineError("original and modified star products disagree");
    if (!original_class_residual(of).is_zero())
        throw EngineError("original-frame class residual is nonzero");
    return s;
}

// --- windows ---------------------------------------------------------------------

// Outside the returned window, nothing can crawl back into the caller's one:
// a term cut at the y or x boundary starts at filtration above 2N + Dy + dim,
// the largest filtration the caller's window can see, and every engine
// operation raises filtration at least as fast as it lowers degrees.
TruncationProfile work_profile(const TruncationProfile& pr) {
    return TruncationProfile(pr.hbar_order + 3,
                             pr.x_degree + 2 * pr.hbar_order + pr.y_degree + pr.dim,
                             pr.y_degree + 2 * pr.hbar_order + pr.dim, pr.dim);
}

}  // namespace starforge
