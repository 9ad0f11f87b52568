#pragma once

#include <gmpxx.h>

#include <string>

namespace starforge {

// Exact complex rational p/q + r/s*i.  mpq_class keeps every value in lowest
// terms with a positive denominator, so equality is plain component equality.
struct CRational {
    mpq_class re;
    mpq_class im;

    CRational() : re(0), im(0) {}
    CRational(long r) : re(r), im(0) {}
    CRational(const mpq_class& r) : re(r), im(0) {}
    CRational(mpq_class r, mpq_class i) : re(std::move(r)), im(std::move(i)) {}
    CRational(long p, long q) : re(mpq_class(p, q)), im(0) { re.canonicalize(); }

    static CRational zero() { return CRational(); }
    static CRational one() { return CRational(1); }
    static CRational i() { return CRational(mpq_class(0), mpq_class(1)); }

    bool is_zero() const { return re == 0 && im == 0; }
    bool is_real() const { return im == 0; }

    CRational operator-() const { return CRational(-re, -im); }

    CRational& operator+=(const CRational& o) {
        re += o.re;
        im += o.im;
        return *this;
    }
    CRational& operator-=(const CRational& o) {
        re -= o.re;
        im -= o.im;
        return *this;
    }
    CRational& operator*=(const CRational& o) {
        mpq_class r = re * o.re - im * o.im;
        mpq_class i = re * o.im + im * o.re;
        re = std::move(r);
        im = std::move(i);
        return *this;
    }
    CRational& operator/=(const CRational& o);

    friend CRational operator+(CRational a, const CRational& b) { return a += b; }
    friend CRational operator-(CRational a, const CRational& b) { return a -= b; }
    friend CRational operator*(CRational a, const CRational& b) { return a *= b; }
    friend CRational operator/(CRational a, const CRational& b) { return a /= b; }

    friend bool operator==(const CRational& a, const CRational& b) {
        return a.re == b.re && a.im == b.im;
    }
    friend bool operator!=(const CRational& a, const CRational& b) { return !(a == b); }

    CRational conj() const { return CRational(re, -im); }

    // |z|^2 as an exact rational.
    mpq_class norm2() const { return re * re + im * im; }

    CRational inverse() const;

    // Canonical text form: "p/q" when the imaginary part vanishes, otherwise
    // "p/q+r/s*i" (or "r/s*i" when only the imaginary part is present), with
    // "/1" suppressed and the sign folded into the numerator.
    std::string str() const;
};

CRational parse_crational(const std::string& text);

}  // namespace starforge
