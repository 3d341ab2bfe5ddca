#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <string>

#include "fqweil/errors.hpp"

namespace fqweil
{

/**
 * Fraction: exact rational number, always stored reduced with positive
 * denominator.  Thin wrapper over GMP's mpq_class; the wrapper pins the
 * canonical-form invariant and supplies the number-theoretic helpers the
 * rest of the library leans on (mod-1 reduction, floor, divisibility).
 */
class Fraction
{
public:
    Fraction() : _q(0) {}
    Fraction(long n) : _q(n) {}
    Fraction(const mpz_class& n) : _q(n) {}
    Fraction(long n, long d) : _q(n, d)
    {
        if (d == 0)
            throw DivisionByZero("Fraction: zero denominator");
        _q.canonicalize();
    }
    Fraction(const mpz_class& n, const mpz_class& d) : _q(n, d)
    {
        if (d == 0)
            throw DivisionByZero("Fraction: zero denominator");
        _q.canonicalize();
    }
    explicit Fraction(const mpq_class& q) : _q(q) { _q.canonicalize(); }

    // Parses "a/b" or "a".
    static Fraction parse(const std::string& s)
    {
        auto slash = s.find('/');
        try
        {
            if (slash == std::string::npos)
                return Fraction(mpz_class(s));
            mpz_class num(s.substr(0, slash));
            mpz_class den(s.substr(slash + 1));
            if (den == 0)
                throw DivisionByZero("Fraction::parse: zero denominator");
            return Fraction(num, den);
        }
        catch (const std::invalid_argument&)
        {
            throw SchemaError("Fraction::parse: malformed rational '" + s + "'");
        }
    }

    const mpz_class numerator() const { return _q.get_num(); }
    const mpz_class denominator() const { return _q.get_den(); }
    const mpq_class& raw() const { return _q; }

    bool is_zero() const { return sgn(_q) == 0; }
    bool is_integer() const { return _q.get_den() == 1; }
    int sign() const { return sgn(_q); }

    Fraction operator-() const { return Fraction(mpq_class(-_q)); }
    Fraction operator+(const Fraction& o) const { return Fraction(mpq_class(_q + o._q)); }
    Fraction operator-(const Fraction& o) const { return Fraction(mpq_class(_q - o._q)); }
    Fraction operator*(const Fraction& o) const { return Fraction(mpq_class(_q * o._q)); }
    Fraction operator/(const Fraction& o) const
    {
        if (o.is_zero())
            throw DivisionByZero("Fraction: division by zero");
        return Fraction(mpq_class(_q / o._q));
    }
    Fraction& operator+=(const Fraction& o)
    {
        _q += o._q;
        return *this;
    }
    Fraction& operator-=(const Fraction& o)
    {
        _q -= o._q;
        return *this;
    }
    Fraction& operator*=(const Fraction& o)
    {
        _q *= o._q;
        return *this;
    }

    bool operator==(const Fraction& o) const { return _q == o._q; }
    bool operator!=(const Fraction& o) const { return _q != o._q; }
    bool operator<(const Fraction& o) const { return _q < o._q; }
    bool operator<=(const Fraction& o) const { return _q <= o._q; }
    bool operator>(const Fraction& o) const { return _q > o._q; }
    bool operator>=(const Fraction& o) const { return _q >= o._q; }

    mpz_class floor() const
    {
        mpz_class f;
        mpz_fdiv_q(f.get_mpz_t(), _q.get_num().get_mpz_t(), _q.get_den().get_mpz_t());
        return f;
    }

    // Value reduced into [0, 1).
    Fraction mod1() const { return *this - Fraction(floor()); }

    // True when this/other is an integer (other nonzero).
    bool divisible_by(const Fraction& other) const
    {
        if (other.is_zero())
            throw DivisionByZero("Fraction::divisible_by: zero modulus");
        return (*this / other).is_integer();
    }

    Fraction pow(long e) const
    {
        if (e < 0)
        {
            if (is_zero())
                throw DivisionByZero("Fraction::pow: zero base, negative exponent");
            return Fraction(1) / pow(-e);
        }
        mpz_class num, den;
        mpz_pow_ui(num.get_mpz_t(), _q.get_num().get_mpz_t(), static_cast<unsigned long>(e));
        mpz_pow_ui(den.get_mpz_t(), _q.get_den().get_mpz_t(), static_cast<unsigned long>(e));
        return Fraction(num, den);
    }

    std::string str() const
    {
        if (is_integer())
            return _q.get_num().get_str();
        return _q.get_num().get_str() + "/" + _q.get_den().get_str();
    }

private:
    mpq_class _q;
};

inline Fraction operator*(long a, const Fraction& f) { return Fraction(a) * f; }

// gcd/lcm on arbitrary-precision integers.
inline mpz_class gcd(const mpz_class& a, const mpz_class& b)
{
    mpz_class g;
    mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return g;
}

inline mpz_class lcm(const mpz_class& a, const mpz_class& b)
{
    mpz_class l;
    mpz_lcm(l.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    return l;
}

inline mpz_class pow_z(const mpz_class& base, unsigned long e)
{
    mpz_class r;
    mpz_pow_ui(r.get_mpz_t(), base.get_mpz_t(), e);
    return r;
}

// Floor of sqrt(n), n >= 0.
inline mpz_class isqrt(const mpz_class& n)
{
    mpz_class r;
    mpz_sqrt(r.get_mpz_t(), n.get_mpz_t());
    return r;
}

// Floor of sqrt(a/b) for a/b >= 0: floor(sqrt(a*b))/b is wrong in general,
// but floor(sqrt(a*b)/b) is exact since sqrt(a/b) = sqrt(a*b)/b.
inline mpz_class isqrt_floor(const Fraction& f)
{
    if (f.sign() < 0)
        throw RangeError("isqrt_floor: negative argument");
    mpz_class ab = f.numerator() * f.denominator();
    mpz_class s = isqrt(ab);
    mpz_class q;
    mpz_fdiv_q(q.get_mpz_t(), s.get_mpz_t(), f.denominator().get_mpz_t());
    return q;
}

} // namespace fqweil
