#include "starforge/hochschild.hpp"

#include <algorithm>
#include <functional>
#include <string>

#include "starforge/errors.hpp"

namespace starforge {

namespace {

bool differentiates_everywhere(const std::vector<MIdx>& slots) {
    for (const auto& m : slots)
        if (m.is_zero()) return false;
    return true;
}

long factorial(int n) {
    long f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

constexpr int kMaxSlotOrder = 20;  // factorials stay within long

// Raw (unnormalized) term map used while expanding coboundaries; the public
// type projects away non-differentiating leftovers at the end.
using RawTerms = std::map<std::vector<MIdx>, HSeries>;

void raw_add(RawTerms& t, const std::vector<MIdx>& slots, const HSeries& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = t.emplace(slots, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) t.erase(it);
    }
}

// All ways to split the multi-index beta into `parts` ordered summands,
// with the multinomial weight beta! / (d0! d1! ... ).
void for_each_split(const MIdx& beta, int parts, int dim,
                    const std::function<void(const std::vector<MIdx>&, long)>& fn) {
    std::vector<MIdx> cur(parts);
    std::function<void(int, long)> rec = [&](int coord, long weight) {
        if (coord == dim) {
            fn(cur, weight);
            return;
        }
        int total = beta[coord];
        if (total == 0) {
            rec(coord + 1, weight);
            return;
        }
        if (total > kMaxSlotOrder)
            throw EngineError("derivative order too large for exact multinomials");
        // distribute `total` among `parts` buckets
        std::vector<int> take(parts, 0);
        std::function<void(int, int)> dist = [&](int bucket, int left) {
            if (bucket == parts - 1) {
                take[bucket] = left;
                long w = factorial(total);
                for (int b = 0; b < parts; ++b) w /= factorial(take[b]);
                for (int b = 0; b < parts; ++b)
                    cur[b].e[coord] = static_cast<std::uint8_t>(take[b]);
                rec(coord + 1, weight * w);
                for (int b = 0; b < parts; ++b) cur[b].e[coord] = 0;
                return;
            }
            for (int v = 0; v <= left; ++v) {
                take[bucket] = v;
                dist(bucket + 1, left - v);
            }
            take[bucket] = 0;
        };
        dist(0, total);
    };
    rec(0, 1);
    (void)dim;
}

// Insertion on raw term maps: q's output feeds slot i of p.
RawTerms raw_insert(const RawTerms& p, int p_arity, int slot, const RawTerms& q,
                    int q_arity) {
    RawTerms out;
    for (const auto& [ps, pc] : p) {
        const MIdx& beta = ps[slot];
        for (const auto& [qs, qc] : q) {
            // beta splits into one part for q's coefficient and one per slot
            for_each_split(beta, q_arity + 1, kMaxDim,
                           [&](const std::vector<MIdx>& parts, long w) {
                               HSeries c = deriv(qc, parts[0]);
                               if (c.is_zero()) return;
                               c = c * pc;
                               if (w != 1) c = c.scaled(CRational(w));
                               std::vector<MIdx> slots;
                               slots.reserve(p_arity + q_arity - 1);
                               for (int j = 0; j < slot; ++j) slots.push_back(ps[j]);
                               for (int j = 0; j < q_arity; ++j)
                                   slots.push_back(qs[j] + parts[j + 1]);
                               for (int j = slot + 1; j < p_arity; ++j)
                                   slots.push_back(ps[j]);
                               raw_add(out, slots, c);
                           });
        }
    }
    return out;
}

RawTerms to_raw(const PolyDiffOp& p) { return p.terms; }

PolyDiffOp project(int arity, const RawTerms& raw) {
    PolyDiffOp out(arity);
    for (const auto& [slots, c] : raw) {
        if (arity >= 1 && !differentiates_everywhere(slots)) continue;
        out.add_term(slots, c);
    }
    return out;
}

// Bare multiplication as a raw arity-2 operator.
RawTerms raw_mult() {
    RawTerms m;
    m[std::vector<MIdx>(2)] = HSeries::one();
    return m;
}

RawTerms raw_product(const Product& prod) {
    RawTerms m = raw_mult();
    for (const auto& [slots, c] : prod.correction.terms) raw_add(m, slots, c);
    return m;
}

// Gerstenhaber bracket on raw term maps with the stated sign convention.
RawTerms raw_gerstenhaber(const RawTerms& q1, int n1, const RawTerms& q2, int n2) {
    int k1 = n1 - 1, k2 = n2 - 1;
    RawTerms out;
    auto side = [&](const RawTerms& a, int na, int ka, const RawTerms& b, int nb,
                    int kb, bool flip) {
        for (int i = 0; i <= ka; ++i) {
            RawTerms ins = raw_insert(a, na, i, b, nb);
            int sign = ((i + ka) * kb) % 2 ? -1 : 1;
            if (flip && (k1 * k2) % 2 == 0) sign = -sign;
            for (const auto& [slots, c] : ins)
                raw_add(out, slots, sign < 0 ? -c : c);
        }
    };
    side(q1, n1, k1, q2, n2, k2, false);
    side(q2, n2, k2, q1, n1, k1, true);
    return out;
}

}  // namespace

PolyDiffOp PolyDiffOp::element(const HSeries& f) {
    PolyDiffOp p(0);
    if (!f.is_zero()) p.terms[std::vector<MIdx>{}] = f;
    return p;
}

PolyDiffOp PolyDiffOp::tensor(const std::vector<MIdx>& slots, const HSeries& c) {
    PolyDiffOp p(static_cast<int>(slots.size()));
    p.add_term(slots, c);
    return p;
}

PolyDiffOp PolyDiffOp::partial(int i) {
    return tensor({MIdx::unit(i - 1)}, HSeries::one());
}

PolyDiffOp PolyDiffOp::identity_op() {
    return tensor({MIdx{}}, HSeries::one());
}

void PolyDiffOp::add_term(const std::vector<MIdx>& slots, const HSeries& c) {
    if (static_cast<int>(slots.size()) != arity)
        throw ArityMismatch("term has " + std::to_string(slots.size()) +
                            " slots, operator arity " + std::to_string(arity));
    if (c.is_zero()) return;
    auto [it, fresh] = terms.emplace(slots, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) terms.erase(it);
    }
}

PolyDiffOp PolyDiffOp::operator-() const {
    PolyDiffOp p(arity);
    for (const auto& [s, c] : terms) p.terms[s] = -c;
    return p;
}

PolyDiffOp& PolyDiffOp::operator+=(const PolyDiffOp& o) {
    for (const auto& [s, c] : o.terms) add_term(s, c);
    return *this;
}

PolyDiffOp& PolyDiffOp::operator-=(const PolyDiffOp& o) {
    for (const auto& [s, c] : o.terms) add_term(s, -c);
    return *this;
}

PolyDiffOp PolyDiffOp::scaled(const CRational& c) const {
    PolyDiffOp p(arity);
    if (c.is_zero()) return p;
    for (const auto& [s, q] : terms) {
        HSeries u = q.scaled(c);
        if (!u.is_zero()) p.terms[s] = u;
    }
    return p;
}

PolyDiffOp PolyDiffOp::shifted(int dk) const {
    PolyDiffOp p(arity);
    for (const auto& [s, q] : terms) p.terms[s] = q.shifted(dk);
    return p;
}

PolyDiffOp PolyDiffOp::normalize() const {
    PolyDiffOp out(arity);
    for (const auto& [slots, c] : terms) {
        if (arity >= 1 && !differentiates_everywhere(slots)) continue;
        out.terms[slots] = c;
    }
    return out;
}

bool PolyDiffOp::is_normalized() const {
    if (arity == 0) return true;
    for (const auto& [slots, c] : terms)
        if (!differentiates_everywhere(slots)) return false;
    return true;
}

int PolyDiffOp::h_filtration() const {
    int best = kInfiniteDegree;
    for (const auto& [s, c] : terms)
        if (!c.coeffs.empty()) best = std::min(best, c.coeffs.begin()->first);
    return best;
}

std::string PolyDiffOp::str(int dim) const {
    if (terms.empty()) return "0";
    std::string out;
    for (const auto& [slots, c] : terms) {
        if (!out.empty()) out += " + ";
        out += "[" + c.str(dim) + "] D";
        for (const auto& m : slots) out += m.str(dim);
        if (slots.empty()) out += "()";
    }
    return out;
}

HSeries deriv(const HSeries& f, const MIdx& beta) {
    HSeries out = f;
    for (int i = 0; i < kMaxDim && !out.is_zero(); ++i)
        for (int r = 0; r < beta[i]; ++r) out = out.dx(i + 1);
    return out;
}

HSeries apply(const PolyDiffOp& p, const std::vector<HSeries>& args) {
    if (static_cast<int>(args.size()) != p.arity)
        throw ArityMismatch("apply got " + std::to_string(args.size()) +
                            " arguments, arity " + std::to_string(p.arity));
    HSeries out;
    for (const auto& [slots, c] : p.terms) {
        HSeries term = c;
        for (int j = 0; j < p.arity && !term.is_zero(); ++j)
            term = term * deriv(args[j], slots[j]);
        out += term;
    }
    return out;
}

Product Product::with_correction(PolyDiffOp pi) {
    if (pi.arity != 2) throw ArityMismatch("product correction must have arity 2");
    Product p;
    p.correction = std::move(pi);
    return p;
}

HSeries apply_product(const Product& prod, const HSeries& a, const HSeries& b) {
    return a * b + apply(prod.correction, {a, b});
}

PolyDiffOp insert_at(const PolyDiffOp& p, int slot, const PolyDiffOp& q) {
    if (slot < 0 || slot >= p.arity) throw ArityMismatch("insertion slot out of range");
    PolyDiffOp out(p.arity + q.arity - 1);
    for (const auto& [slots, c] :
         raw_insert(to_raw(p), p.arity, slot, to_raw(q), q.arity))
        out.terms[slots] = c;
    return out;
}

PolyDiffOp hoch_coboundary(const PolyDiffOp& p, const Product& prod) {
    int k = p.arity;
    RawTerms m = raw_product(prod);
    RawTerms praw = to_raw(p);
    RawTerms acc;
    // outer multiplications: prod(a0, P(...)) and (-1)^{k+1} prod(P(...), ak)
    {
        RawTerms left = raw_insert(m, 2, 1, praw, k);
        for (const auto& [s, c] : left) raw_add(acc, s, c);
        RawTerms right = raw_insert(m, 2, 0, praw, k);
        int sign = (k + 1) % 2 ? -1 : 1;
        for (const auto& [s, c] : right) raw_add(acc, s, sign < 0 ? -c : c);
    }
    // neighbor merges with sign (-1)^j for the merge feeding slot j-1
    for (int j = 1; j <= k; ++j) {
        RawTerms merged = raw_insert(praw, k, j - 1, m, 2);
        int sign = j % 2 ? -1 : 1;
        for (const auto& [s, c] : merged) raw_add(acc, s, sign < 0 ? -c : c);
    }
    return project(k + 1, acc);
}

PolyDiffOp gerstenhaber(const PolyDiffOp& q1, const PolyDiffOp& q2) {
    return project(q1.arity + q2.arity - 1,
                   raw_gerstenhaber(to_raw(q1), q1.arity, to_raw(q2), q2.arity));
}

PolyDiffOp gerstenhaber_with_product(const Product& prod, const PolyDiffOp& p) {
    return project(p.arity + 1,
                   raw_gerstenhaber(raw_product(prod), 2, to_raw(p), p.arity));
}

PolyDiffOp reduce(const PolyDiffOp& p, const TruncationProfile& profile) {
    PolyDiffOp out(p.arity);
    for (const auto& [s, c] : p.terms) {
        HSeries r = reduce(c, profile);
        if (!r.is_zero()) out.terms[s] = r;
    }
    return out;
}

}  // namespace starforge
