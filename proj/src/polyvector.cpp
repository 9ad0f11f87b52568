#include "starforge/polyvector.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "starforge/errors.hpp"

namespace starforge {

namespace {

inline std::uint16_t bit(int i) { return static_cast<std::uint16_t>(1u << (i - 1)); }

// Sign for removing index i from the sorted list S when the derivation acts
// from the right: (-1)^{#elements above i}.
inline int sign_above(std::uint16_t s, int i) {
    return (__builtin_popcount(s >> i) & 1) ? -1 : 1;
}

// Sign for removing index i when acting from the left: (-1)^{#elements below}.
inline int sign_below(std::uint16_t s, int i) {
    return (__builtin_popcount(s & (bit(i) - 1)) & 1) ? -1 : 1;
}

std::string mask_str(std::uint16_t s, const char* head) {
    std::string out = head;
    out += "(";
    bool first = true;
    for (int i = 1; i <= kMaxDim; ++i) {
        if (!(s & bit(i))) continue;
        if (!first) out += ",";
        out += std::to_string(i);
        first = false;
    }
    return out + ")";
}

template <class T>
std::string tensor_str(const T& t, int dim, const char* head) {
    if (t.comp.empty()) return "0";
    std::vector<std::uint16_t> order;
    for (const auto& [s, c] : t.comp) order.push_back(s);
    std::sort(order.begin(), order.end(), [](std::uint16_t a, std::uint16_t b) {
        return DxMask::lex_less(DxMask(a), DxMask(b));
    });
    std::string out;
    for (std::uint16_t s : order) {
        if (!out.empty()) out += " + ";
        out += "[" + t.comp.at(s).str(dim) + "] " + mask_str(s, head);
    }
    return out;
}

}  // namespace

PolyVectorField PolyVectorField::function(const HSeries& f) {
    PolyVectorField v(0);
    if (!f.is_zero()) v.comp[0] = f;
    return v;
}

PolyVectorField PolyVectorField::basis(int i) {
    PolyVectorField v(1);
    v.comp[bit(i)] = HSeries::one();
    return v;
}

PolyVectorField PolyVectorField::wedge_basis(int i, int j) {
    PolyVectorField v(2);
    if (i == j) return v;
    HSeries c = HSeries::one();
    if (i > j) {
        std::swap(i, j);
        c = -c;
    }
    v.comp[static_cast<std::uint16_t>(bit(i) | bit(j))] = c;
    return v;
}

PolyVectorField PolyVectorField::monomial(int k, std::uint16_t mask, const HSeries& c) {
    PolyVectorField v(k);
    if (!c.is_zero() && __builtin_popcount(mask) == k) v.comp[mask] = c;
    return v;
}

const HSeries& PolyVectorField::component(std::uint16_t mask) const {
    static const HSeries kZero;
    auto it = comp.find(mask);
    return it == comp.end() ? kZero : it->second;
}

void PolyVectorField::add_component(std::uint16_t mask, const HSeries& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = comp.emplace(mask, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) comp.erase(it);
    }
}

PolyVectorField PolyVectorField::operator-() const {
    PolyVectorField v(arity);
    for (const auto& [s, c] : comp) v.comp[s] = -c;
    return v;
}

PolyVectorField& PolyVectorField::operator+=(const PolyVectorField& o) {
    for (const auto& [s, c] : o.comp) add_component(s, c);
    return *this;
}

PolyVectorField& PolyVectorField::operator-=(const PolyVectorField& o) {
    for (const auto& [s, c] : o.comp) add_component(s, -c);
    return *this;
}

PolyVectorField PolyVectorField::scaled(const CRational& c) const {
    PolyVectorField v(arity);
    if (c.is_zero()) return v;
    for (const auto& [s, q] : comp) {
        HSeries u = q.scaled(c);
        if (!u.is_zero()) v.comp[s] = u;
    }
    return v;
}

PolyVectorField PolyVectorField::shifted(int dk) const {
    PolyVectorField v(arity);
    for (const auto& [s, q] : comp) v.comp[s] = q.shifted(dk);
    return v;
}

std::string PolyVectorField::str(int dim) const { return tensor_str(*this, dim, "∂"); }

DiffForm DiffForm::function(const HSeries& f) {
    DiffForm v(0);
    if (!f.is_zero()) v.comp[0] = f;
    return v;
}

DiffForm DiffForm::basis(int i) {
    DiffForm v(1);
    v.comp[bit(i)] = HSeries::one();
    return v;
}

DiffForm DiffForm::monomial(int q, std::uint16_t mask, const HSeries& c) {
    DiffForm v(q);
    if (!c.is_zero() && __builtin_popcount(mask) == q) v.comp[mask] = c;
    return v;
}

const HSeries& DiffForm::component(std::uint16_t mask) const {
    static const HSeries kZero;
    auto it = comp.find(mask);
    return it == comp.end() ? kZero : it->second;
}

void DiffForm::add_component(std::uint16_t mask, const HSeries& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = comp.emplace(mask, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) comp.erase(it);
    }
}

DiffForm DiffForm::operator-() const {
    DiffForm v(degree);
    for (const auto& [s, c] : comp) v.comp[s] = -c;
    return v;
}

DiffForm& DiffForm::operator+=(const DiffForm& o) {
    for (const auto& [s, c] : o.comp) add_component(s, c);
    return *this;
}

DiffForm& DiffForm::operator-=(const DiffForm& o) {
    for (const auto& [s, c] : o.comp) add_component(s, -c);
    return *this;
}

DiffForm DiffForm::scaled(const CRational& c) const {
    DiffForm v(degree);
    if (c.is_zero()) return v;
    for (const auto& [s, q] : comp) {
        HSeries u = q.scaled(c);
        if (!u.is_zero()) v.comp[s] = u;
    }
    return v;
}

DiffForm DiffForm::shifted(int dk) const {
    DiffForm v(degree);
    for (const auto& [s, q] : comp) v.comp[s] = q.shifted(dk);
    return v;
}

std::string DiffForm::str(int dim) const { return tensor_str(*this, dim, "dx"); }

PolyVectorField wedge(const PolyVectorField& a, const PolyVectorField& b, int dim) {
    PolyVectorField out(a.arity + b.arity);
    if (out.arity > dim) return out;
    for (const auto& [s, cs] : a.comp)
        for (const auto& [t, ct] : b.comp) {
            int sign = koszul_sign(DxMask(s), DxMask(t));
            if (sign == 0) continue;
            HSeries c = cs * ct;
            if (sign < 0) c = -c;
            out.add_component(static_cast<std::uint16_t>(s | t), c);
        }
    return out;
}

DiffForm wedge(const DiffForm& a, const DiffForm& b, int dim) {
    DiffForm out(a.degree + b.degree);
    if (out.degree > dim) return out;
    for (const auto& [s, cs] : a.comp)
        for (const auto& [t, ct] : b.comp) {
            int sign = koszul_sign(DxMask(s), DxMask(t));
            if (sign == 0) continue;
            HSeries c = cs * ct;
            if (sign < 0) c = -c;
            out.add_component(static_cast<std::uint16_t>(s | t), c);
        }
    return out;
}

namespace {

// Right composition sum_i (d/dpsi_i P)(d/dx^i Q), the building block of the
// bracket; psi-derivatives act from the right.
PolyVectorField compose(const PolyVectorField& p, const PolyVectorField& q, int dim) {
    PolyVectorField out(p.arity + q.arity - 1);
    for (const auto& [s, cs] : p.comp) {
        std::uint16_t rest = s;
        while (rest) {
            int i = __builtin_ctz(rest) + 1;
            rest = static_cast<std::uint16_t>(rest & (rest - 1));
            int rs = sign_above(s, i);
            std::uint16_t sm = static_cast<std::uint16_t>(s & ~bit(i));
            for (const auto& [t, ct] : q.comp) {
                HSeries dq = ct.dx(i);
                if (dq.is_zero()) continue;
                int ks = koszul_sign(DxMask(sm), DxMask(t));
                if (ks == 0) continue;
                HSeries c = cs * dq;
                if (rs * ks < 0) c = -c;
                out.add_component(static_cast<std::uint16_t>(sm | t), c);
            }
        }
    }
    return out;
}

}  // namespace

PolyVectorField schouten(const PolyVectorField& g1, const PolyVectorField& g2, int dim) {
    int p = g1.arity, q = g2.arity;
    if (p + q - 1 < 0) return PolyVectorField(0);
    if (p + q - 1 > dim) return PolyVectorField(p + q - 1);
    PolyVectorField out = compose(g1, g2, dim);
    PolyVectorField flip = compose(g2, g1, dim);
    if (((p - 1) * (q - 1)) % 2 == 0) flip = -flip;
    out += flip;
    return out;
}

PolyVectorField pi_sharp(const PolyVectorField& pi, const DiffForm& eta, int dim) {
    if (eta.degree == 0) return PolyVectorField::function(eta.component(0));
    // Anchor on basis 1-forms: V_j = i_{dx^j} pi, contraction in the first
    // slot with alternating signs.
    std::vector<PolyVectorField> anchor(dim + 1, PolyVectorField(1));
    for (const auto& [s, c] : pi.comp) {
        std::uint16_t rest = s;
        while (rest) {
            int j = __builtin_ctz(rest) + 1;
            rest = static_cast<std::uint16_t>(rest & (rest - 1));
            HSeries v = (sign_below(s, j) < 0) ? -c : c;
            anchor[j].add_component(static_cast<std::uint16_t>(s & ~bit(j)), v);
        }
    }
    PolyVectorField out(eta.degree);
    for (const auto& [t, c] : eta.comp) {
        PolyVectorField w = PolyVectorField::function(c);
        std::uint16_t rest = t;
        while (rest) {
            int j = __builtin_ctz(rest) + 1;
            rest = static_cast<std::uint16_t>(rest & (rest - 1));
            w = wedge(w, anchor[j], dim);
            if (w.is_zero()) break;
        }
        out += w;
    }
    return out;
}

HSeries poisson_bracket(const PolyVectorField& pi, const HSeries& f, const HSeries& g,
                        int dim) {
    HSeries out;
    for (const auto& [s, c] : pi.comp) {
        int i = __builtin_ctz(s) + 1;
        int j = __builtin_ctz(s & (s - 1)) + 1;
        out += c * (f.dx(i) * g.dx(j) - f.dx(j) * g.dx(i));
    }
    return out;
}

HSeries jacobiator(const PolyVectorField& pi, const HSeries& f, const HSeries& g,
                   const HSeries& h, int dim) {
    HSeries out = poisson_bracket(pi, f, poisson_bracket(pi, g, h, dim), dim);
    out += poisson_bracket(pi, g, poisson_bracket(pi, h, f, dim), dim);
    out += poisson_bracket(pi, h, poisson_bracket(pi, f, g, dim), dim);
    return out;
}

HSeries evaluate(const PolyVectorField& gamma, const std::vector<DiffForm>& forms,
                 int dim) {
    if (static_cast<int>(forms.size()) != gamma.arity)
        throw ArityMismatch("evaluate needs exactly arity-many 1-forms");
    HSeries out;
    for (const auto& [s, c] : gamma.comp) {
        std::vector<int> idx;
        std::uint16_t rest = s;
        while (rest) {
            idx.push_back(__builtin_ctz(rest) + 1);
            rest = static_cast<std::uint16_t>(rest & (rest - 1));
        }
        // det of the matrix forms[r](dx^{idx[c]}), expanded over permutations.
        int k = static_cast<int>(idx.size());
        std::vector<int> perm(k);
        for (int i = 0; i < k; ++i) perm[i] = i;
        HSeries det;
        do {
            int sign = 1;
            for (int i = 0; i < k; ++i)
                for (int j = i + 1; j < k; ++j)
                    if (perm[i] > perm[j]) sign = -sign;
            HSeries prod = HSeries::one();
            for (int r = 0; r < k; ++r) {
                prod = prod * forms[r].component(bit(idx[perm[r]]));
                if (prod.is_zero()) break;
            }
            if (sign < 0) prod = -prod;
            det += prod;
        } while (std::next_permutation(perm.begin(), perm.end()));
        out += c * det;
    }
    return out;
}

DiffForm de_rham(const DiffForm& eta, int dim) {
    DiffForm out(eta.degree + 1);
    for (const auto& [s, c] : eta.comp)
        for (int i = 1; i <= dim; ++i) {
            if (s & bit(i)) continue;
            HSeries dc = c.dx(i);
            if (dc.is_zero()) continue;
            if (sign_below(s, i) < 0) dc = -dc;
            out.add_component(static_cast<std::uint16_t>(s | bit(i)), dc);
        }
    return out;
}

DiffForm contract(const PolyVectorField& x, const DiffForm& eta, int dim) {
    DiffForm out(eta.degree - 1);
    if (eta.degree == 0) return out;
    for (const auto& [t, c] : eta.comp) {
        std::uint16_t rest = t;
        while (rest) {
            int j = __builtin_ctz(rest) + 1;
            rest = static_cast<std::uint16_t>(rest & (rest - 1));
            const HSeries& xj = x.component(bit(j));
            if (xj.is_zero()) continue;
            HSeries v = xj * c;
            if (sign_below(t, j) < 0) v = -v;
            out.add_component(static_cast<std::uint16_t>(t & ~bit(j)), v);
        }
    }
    return out;
}

DiffForm lie_derivative(const PolyVectorField& x, const DiffForm& eta, int dim) {
    return contract(x, de_rham(eta, dim), dim) + de_rham(contract(x, eta, dim), dim);
}

HSeries pairing(const GenSection& e1, const GenSection& e2, int dim) {
    HSeries out;
    for (int i = 1; i <= dim; ++i) {
        out += e2.form.component(bit(i)) * e1.vec.component(bit(i));
        out += e1.form.component(bit(i)) * e2.vec.component(bit(i));
    }
    return out;
}

GenSection courant(const GenSection& e1, const GenSection& e2, int dim) {
    PolyVectorField v = schouten(e1.vec, e2.vec, dim);
    DiffForm f = lie_derivative(e1.vec, e2.form, dim) -
                 contract(e2.vec, de_rham(e1.form, dim), dim);
    return GenSection(std::move(v), std::move(f));
}

GenSection b_transform(const DiffForm& b, const GenSection& e, int dim) {
    return GenSection(e.vec, e.form + contract(e.vec, b, dim));
}

DiffForm d_function(const HSeries& f, int dim) {
    DiffForm out(1);
    for (int i = 1; i <= dim; ++i) out.add_component(bit(i), f.dx(i));
    return out;
}

PolyVectorField reduce(const PolyVectorField& a, const TruncationProfile& p) {
    PolyVectorField out(a.arity);
    for (const auto& [s, c] : a.comp) {
        HSeries r = reduce(c, p);
        if (!r.is_zero()) out.comp[s] = r;
    }
    return out;
}

DiffForm reduce(const DiffForm& a, const TruncationProfile& p) {
    DiffForm out(a.degree);
    for (const auto& [s, c] : a.comp) {
        HSeries r = reduce(c, p);
        if (!r.is_zero()) out.comp[s] = r;
    }
    return out;
}

}  // namespace starforge
