#include "starforge/rational.hpp"

#include <cstddef>

#include "starforge/errors.hpp"

namespace starforge {

CRational CRational::inverse() const {
    mpq_class n = norm2();
    if (n == 0) throw NonInvertible("division by zero coefficient");
    return CRational(re / n, -im / n);
}

CRational& CRational::operator/=(const CRational& o) { return *this *= o.inverse(); }

std::string CRational::str() const {
    if (im == 0) return re.get_str();
    std::string imag = (im == 1) ? "i" : (im == -1) ? "-i" : im.get_str() + "*i";
    if (re == 0) return imag;
    if (im > 0) return re.get_str() + "+" + imag;
    return re.get_str() + imag;
}

namespace {

// Splits "a+b" / "a-b" at the top-level sign separating the two summands.
// A sign directly after '/', '*' or at position 0 is part of a number.
std::size_t split_point(const std::string& s) {
    for (std::size_t p = 1; p < s.size(); ++p) {
        if ((s[p] == '+' || s[p] == '-') && s[p - 1] != '/' && s[p - 1] != '*' &&
            s[p - 1] != '+' && s[p - 1] != '-' && s[p - 1] != 'e' && s[p - 1] != 'E')
            return p;
    }
    return std::string::npos;
}

mpq_class parse_rat(std::string t) {
    if (t.empty()) throw ParseError("empty rational");
    if (t == "+") t = "1";
    if (t == "-") t = "-1";
    if (t.size() > 1 && t.front() == '+') t.erase(0, 1);
    mpq_class q;
    if (q.set_str(t, 10) != 0) throw ParseError("bad rational '" + t + "'");
    q.canonicalize();
    return q;
}

// One summand: "p/q" or "r/s*i" or "i" / "-i" / "+i".
void accumulate(CRational& out, std::string term) {
    if (term.empty()) throw ParseError("empty coefficient term");
    bool imag = false;
    if (term.back() == 'i') {
        imag = true;
        term.pop_back();
        if (!term.empty() && term.back() == '*') term.pop_back();
        if (term.empty()) term = "1";
    }
    mpq_class v = parse_rat(term);
    if (imag)
        out.im += v;
    else
        out.re += v;
}

}  // namespace

CRational parse_crational(const std::string& text) {
    std::string s;
    for (char c : text)
        if (c != ' ' && c != '\t') s += c;
    if (s.empty()) throw ParseError("empty coefficient");
    CRational out;
    std::size_t cut = split_point(s);
    if (cut == std::string::npos) {
        accumulate(out, s);
    } else {
        accumulate(out, s.substr(0, cut));
        accumulate(out, s.substr(cut));
    }
    return out;
}

}  // namespace starforge
