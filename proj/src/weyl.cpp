#include "starforge/weyl.hpp"

#include <string>
#include <vector>

#include "starforge/errors.hpp"

namespace starforge {

WeylElement WeylElement::one() { return constant(CRational::one()); }

WeylElement WeylElement::constant(const CRational& c) {
    WeylElement w;
    if (!c.is_zero()) w.terms[WeylKey{}] = c;
    return w;
}

WeylElement WeylElement::monomial(const WeylKey& key, const CRational& c) {
    WeylElement w;
    if (!c.is_zero()) w.terms[key] = c;
    return w;
}

WeylElement WeylElement::x_var(int i) {
    WeylKey key;
    key.a = MIdx::unit(i - 1);
    return monomial(key, CRational::one());
}

WeylElement WeylElement::y_var(int i) {
    WeylKey key;
    key.b = MIdx::unit(i - 1);
    return monomial(key, CRational::one());
}

WeylElement WeylElement::dx_gen(int i) {
    WeylKey key;
    key.s = DxMask(static_cast<std::uint16_t>(1u << (i - 1)));
    return monomial(key, CRational::one());
}

WeylElement WeylElement::h_pow(int k) {
    WeylKey key;
    key.k = k;
    return monomial(key, CRational::one());
}

WeylElement WeylElement::from_hseries(const HSeries& s) {
    WeylElement w;
    for (const auto& [k, p] : s.coeffs)
        for (const auto& [m, c] : p.terms) {
            WeylKey key;
            key.k = k;
            key.a = m;
            w.terms[key] = c;
        }
    return w;
}

const CRational& WeylElement::coeff(const WeylKey& key) const {
    static const CRational kZero;
    auto it = terms.find(key);
    return it == terms.end() ? kZero : it->second;
}

void WeylElement::add_term(const WeylKey& key, const CRational& c) {
    if (c.is_zero()) return;
    auto [it, fresh] = terms.emplace(key, c);
    if (!fresh) {
        it->second += c;
        if (it->second.is_zero()) terms.erase(it);
    }
}

WeylElement WeylElement::operator-() const {
    WeylElement w;
    for (const auto& [key, c] : terms) w.terms[key] = -c;
    return w;
}

WeylElement& WeylElement::operator+=(const WeylElement& o) {
    for (const auto& [key, c] : o.terms) add_term(key, c);
    return *this;
}

WeylElement& WeylElement::operator-=(const WeylElement& o) {
    for (const auto& [key, c] : o.terms) add_term(key, -c);
    return *this;
}

WeylElement operator*(const WeylElement& a, const WeylElement& b) {
    WeylElement w;
    for (const auto& [ka, ca] : a.terms)
        for (const auto& [kb, cb] : b.terms) {
            int sign = koszul_sign(ka.s, kb.s);
            if (sign == 0) continue;
            WeylKey key;
            key.k = ka.k + kb.k;
            key.a = ka.a + kb.a;
            key.b = ka.b + kb.b;
            key.s = DxMask(static_cast<std::uint16_t>(ka.s.bits | kb.s.bits));
            CRational c = ca * cb;
            if (sign < 0) c = -c;
            w.add_term(key, c);
        }
    return w;
}

WeylElement WeylElement::scaled(const CRational& c) const {
    WeylElement w;
    if (c.is_zero()) return w;
    for (const auto& [key, v] : terms) {
        CRational u = v * c;
        if (!u.is_zero()) w.terms[key] = u;
    }
    return w;
}

WeylElement WeylElement::d_x(int i) const {
    WeylElement w;
    int j = i - 1;
    for (const auto& [key, c] : terms) {
        if (key.a[j] == 0) continue;
        WeylKey nk = key;
        nk.a = key.a.lowered(j);
        w.add_term(nk, c * CRational(key.a[j]));
    }
    return w;
}

WeylElement WeylElement::d_y(int i) const {
    WeylElement w;
    int j = i - 1;
    for (const auto& [key, c] : terms) {
        if (key.b[j] == 0) continue;
        WeylKey nk = key;
        nk.b = key.b.lowered(j);
        w.add_term(nk, c * CRational(key.b[j]));
    }
    return w;
}

WeylElement WeylElement::shift_h(int dk) const {
    WeylElement w;
    for (const auto& [key, c] : terms) {
        WeylKey nk = key;
        nk.k += dk;
        w.terms[nk] = c;
    }
    return w;
}

WeylElement WeylElement::div_h(int dk) const {
    WeylElement w;
    for (const auto& [key, c] : terms) {
        if (key.k < dk)
            throw NonDivisible("term with h^" + std::to_string(key.k) +
                               " not divisible by h^" + std::to_string(dk));
        WeylKey nk = key;
        nk.k -= dk;
        w.terms[nk] = c;
    }
    return w;
}

WeylElement WeylElement::wedge_dx(int i) const {
    WeylElement w;
    for (const auto& [key, c] : terms) {
        DxMask out;
        int sign = wedge_front(i, key.s, &out);
        if (sign == 0) continue;
        WeylKey nk = key;
        nk.s = out;
        w.add_term(nk, sign < 0 ? -c : c);
    }
    return w;
}

WeylElement WeylElement::contract_dx(int i) const {
    WeylElement w;
    for (const auto& [key, c] : terms) {
        if (!key.s.has(i)) continue;
        int below = __builtin_popcount(key.s.bits & ((1u << (i - 1)) - 1));
        WeylKey nk = key;
        nk.s = DxMask(static_cast<std::uint16_t>(key.s.bits & ~(1u << (i - 1))));
        w.add_term(nk, (below & 1) ? -c : c);
    }
    return w;
}

int WeylElement::top_dx_degree() const {
    int q = 0;
    for (const auto& [key, c] : terms)
        if (key.s.size() > q) q = key.s.size();
    return q;
}

bool WeylElement::is_dx_homogeneous(int q) const {
    for (const auto& [key, c] : terms)
        if (key.s.size() != q) return false;
    return true;
}

HSeries WeylElement::scalar_part() const {
    HSeries s;
    for (const auto& [key, c] : terms) {
        if (!key.b.is_zero() || !key.s.empty()) continue;
        s.add_term(key.k, TruncPoly::monomial(key.a, c));
    }
    return s;
}

std::string WeylElement::str(int dim) const {
    if (terms.empty()) return "0";
    std::string out;
    for (const auto& [key, c] : terms) {
        if (!out.empty()) out += " + ";
        out += c.str() + " h^" + std::to_string(key.k) + " x^" + key.a.str(dim) +
               " y^" + key.b.str(dim) + " dx" + key.s.str();
    }
    return out;
}

WeylElement reduce(const WeylElement& a, const TruncationProfile& p) {
    WeylElement w;
    for (const auto& [key, c] : a.terms) {
        if (key.k > p.hbar_order) continue;
        if (key.a.degree() > p.x_degree) continue;
        if (key.b.degree() > p.y_degree) continue;
        w.terms[key] = c;
    }
    return w;
}

int filtration_degree(const WeylElement& a) {
    if (a.is_zero()) throw ZeroElement();
    int best = kInfiniteDegree;
    for (const auto& [key, c] : a.terms) {
        int d = 2 * key.k + key.b.degree() + key.s.size();
        if (d < best) best = d;
    }
    return best;
}

WeylElement series_invert(const WeylElement& s, const TruncationProfile& p) {
    WeylElement a = reduce(s, p);
    if (a.top_dx_degree() != 0)
        throw NonInvertible("element has dx-degree > 0");
    CRational c0 = a.coeff(WeylKey{});
    if (c0.is_zero()) throw NonInvertible("element has no constant term");
    WeylElement u = WeylElement::one() - a.scaled(c0.inverse());
    WeylElement inv = WeylElement::one();
    WeylElement pow = u;
    int bound = p.hbar_order + p.x_degree + p.y_degree;
    for (int m = 1; m <= bound && !pow.is_zero(); ++m) {
        inv += pow;
        pow = reduce(pow * u, p);
    }
    return reduce(inv.scaled(c0.inverse()), p);
}

namespace {

MIdx parse_tuple(const std::string& t, int dim) {
    // t is "(a1,..,ad)".
    if (t.size() < 2 || t.front() != '(' || t.back() != ')')
        throw ParseError("bad multi-index '" + t + "'");
    MIdx m;
    int slot = 0;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) throw ParseError("empty entry in '" + t + "'");
        if (slot >= dim) throw ParseError("multi-index wider than dim in '" + t + "'");
        int v = std::stoi(cur);
        if (v < 0 || v > 255) throw ParseError("exponent out of range in '" + t + "'");
        m.e[slot++] = static_cast<std::uint8_t>(v);
        cur.clear();
    };
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        if (t[i] == ',')
            flush();
        else
            cur += t[i];
    }
    flush();
    if (slot != dim) throw ParseError("multi-index narrower than dim in '" + t + "'");
    return m;
}

DxMask parse_mask(const std::string& t) {
    // t is "{i,j,..}" or "{}".
    if (t.size() < 2 || t.front() != '{' || t.back() != '}')
        throw ParseError("bad dx set '" + t + "'");
    DxMask s;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        int i = std::stoi(cur);
        if (i < 1 || i > kMaxDim) throw ParseError("dx index out of range in '" + t + "'");
        if (s.has(i)) throw ParseError("repeated dx index in '" + t + "'");
        s.bits |= static_cast<std::uint16_t>(1u << (i - 1));
        cur.clear();
    };
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        if (t[i] == ',')
            flush();
        else
            cur += t[i];
    }
    flush();
    return s;
}

}  // namespace

WeylElement parse_weyl(const std::string& text, int dim) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            if (!cur.empty()) tokens.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));

    WeylElement out;
    WeylKey key;
    CRational c;
    bool open = false, have_coeff = false;
    auto flush = [&] {
        if (!open) return;
        out.add_term(key, have_coeff ? c : CRational::one());
        key = WeylKey{};
        have_coeff = false;
        open = false;
    };
    for (const std::string& tok : tokens) {
        if (tok == "+") {
            if (!open) throw ParseError("dangling '+'");
            flush();
            continue;
        }
        if (tok.rfind("h^", 0) == 0) {
            open = true;
            key.k = std::stoi(tok.substr(2));
            if (key.k < 0) throw ParseError("negative h power");
        } else if (tok.rfind("x^", 0) == 0) {
            open = true;
            key.a = parse_tuple(tok.substr(2), dim);
        } else if (tok.rfind("y^", 0) == 0) {
            open = true;
            key.b = parse_tuple(tok.substr(2), dim);
        } else if (tok.rfind("dx{", 0) == 0) {
            open = true;
            key.s = parse_mask(tok.substr(2));
        } else if (tok == "0") {
            continue;
        } else {
            if (have_coeff) flush();
            c = parse_crational(tok);
            have_coeff = true;
            open = true;
        }
    }
    flush();
    return out;
}

}  // namespace starforge
