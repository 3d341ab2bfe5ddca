#pragma once

#include <utility>
#include <vector>

#include "fqweil/cyclotomic.hpp"
#include "fqweil/errors.hpp"
#include "fqweil/lattice.hpp"

namespace fqweil
{

/**
 * Representation numbers N_{nu,m}(a) and their capped scaled variants, the
 * Moebius-weighted sums G and G-tilde built from them, and the unit-group
 * exponential sums they evaluate.  Everything here is brute-force coset
 * enumeration; these are the independent arithmetic oracles the closed
 * Fourier-coefficient formulas are checked against.
 */

inline int moebius_prime_power(long exponent)
{
    if (exponent == 0)
        return 1;
    if (exponent == 1)
        return -1;
    return 0;
}

inline long ipow(long base, long e)
{
    long r = 1;
    while (e-- > 0)
        r *= base;
    return r;
}

inline std::vector<long> units_mod(long m)
{
    std::vector<long> out;
    for (long h = 1; h < m; ++h)
    {
        mpz_class g = gcd(mpz_class(h), mpz_class(m));
        if (g == 1)
            out.push_back(h);
    }
    if (m == 1)
        out.push_back(0); // the unit group mod 1 is trivial; e-sum has one term
    return out;
}

// N_{nu,m}(a): #{ v in L/aL : q(v+nu) - m == 0 mod a }
inline mpz_class rep_number(const EvenLattice& lat, const FracVec& nu, const Fraction& m, long a)
{
    const long d = lat.dim();
    if (static_cast<long>(nu.size()) != d)
        throw MembershipViolation("rep_number: element dimension mismatch");
    if (a <= 0)
        throw RangeError("rep_number: modulus must be positive");
    if (!(m - lat.q_lift(nu)).is_integer())
        throw PrecisionViolation("rep_number: target not congruent to q(nu) mod 1");
    mpz_class count = 0;
    for (const auto& v : enumerate_cosets(lat, a))
    {
        FracVec x(d);
        for (long i = 0; i < d; ++i)
            x[i] = Fraction(v[i]) + nu[i];
        Fraction diff = lat.q_lift(x) - m;
        if (!diff.is_integer())
            throw PrecisionViolation("rep_number: non-integral congruence difference");
        if (diff.numerator() % a == 0)
            ++count;
    }
    return count;
}

// N-tilde_{rho,r}(a): #{ v in L/(a,cap)L : scaling*q(v+rho) - r == 0 mod a }
// with cap = p^l and scaling = p^{2(s-l)}.  When the congruence modulus
// exceeds the coset cap the summand must not depend on the representative;
// that is asserted per coset rather than assumed.
inline mpz_class rep_number_scaled(const EvenLattice& lat, const FracVec& rho, const Fraction& r,
                                   long a, long scaling, long cap)
{
    const long d = lat.dim();
    if (static_cast<long>(rho.size()) != d)
        throw MembershipViolation("rep_number_scaled: element dimension mismatch");
    if (a <= 0 || scaling <= 0 || cap <= 0)
        throw RangeError("rep_number_scaled: parameters must be positive");
    const Fraction qscale(scaling);
    if (!(r - qscale * lat.q_lift(rho)).is_integer())
        throw PrecisionViolation("rep_number_scaled: target not congruent mod 1");
    long group = static_cast<long>(gcd(mpz_class(a), mpz_class(cap)).get_si());
    const bool check_reps = group < a;
    mpz_class count = 0;
    for (const auto& v : enumerate_cosets(lat, group))
    {
        FracVec x(d);
        for (long i = 0; i < d; ++i)
            x[i] = Fraction(v[i]) + rho[i];
        Fraction diff = qscale * lat.q_lift(x) - r;
        if (!diff.is_integer())
            throw PrecisionViolation("rep_number_scaled: non-integral congruence difference");
        bool hit = diff.numerator() % a == 0;
        if (check_reps)
        {
            FracVec y = x;
            y[0] += Fraction(group);
            Fraction diff2 = qscale * lat.q_lift(y) - r;
            bool hit2 = diff2.is_integer() && diff2.numerator() % a == 0;
            if (hit != hit2)
                throw PrecisionViolation(
                    "rep_number_scaled: summand depends on the coset representative");
        }
        if (hit)
            ++count;
    }
    return count;
}

// G_{nu,m}(s) = sum over a | p^s of mu(p^s/a) a^{1-D} N_{nu,m}(a)
inline Fraction moebius_sum(const EvenLattice& lat, const FracVec& nu, const Fraction& m, long p,
                            long s)
{
    if (s < 1)
        throw RangeError("moebius_sum: s must be >= 1");
    const long d = lat.dim();
    Fraction acc(0);
    for (long j = 0; j <= s; ++j)
    {
        int mu = moebius_prime_power(s - j);
        if (mu == 0)
            continue;
        long a = ipow(p, j);
        Fraction weight = Fraction(a).pow(1 - d);
        acc += Fraction(mu) * weight * Fraction(rep_number(lat, nu, m, a));
    }
    return acc;
}

// G-tilde_{rho,r}(s) = sum over a | p^s of mu(p^s/a) a (a,p^l)^{-D} N-tilde_{rho,r}(a)
inline Fraction moebius_sum_scaled(const EvenLattice& lat, const FracVec& rho, const Fraction& r,
                                   long p, long s, long l)
{
    if (s < 1 || l < 1)
        throw RangeError("moebius_sum_scaled: s and l must be >= 1");
    const long d = lat.dim();
    const long scaling = ipow(p, 2 * (s - l) > 0 ? 2 * (s - l) : 0);
    const long cap = ipow(p, l);
    Fraction acc(0);
    for (long j = 0; j <= s; ++j)
    {
        int mu = moebius_prime_power(s - j);
        if (mu == 0)
            continue;
        long a = ipow(p, j);
        long g = static_cast<long>(gcd(mpz_class(a), mpz_class(cap)).get_si());
        Fraction weight = Fraction(a) * Fraction(g).pow(-d);
        acc += Fraction(mu) * weight * Fraction(rep_number_scaled(lat, rho, r, a, scaling, cap));
    }
    return acc;
}

// Unit-group exponential sum against the Ramanujan/Moebius evaluation:
// lhs = sum over v in L/p^sL, h in (Z/p^s)^* of e(h (q(v+lambda) - n) / p^s)
// rhs = p^{sD} G_{lambda,n}(s)
inline std::pair<Cyclotomic, Cyclotomic> ramanujan_check(const CtxPtr& ctx, const EvenLattice& lat,
                                                         const FracVec& lambda, const Fraction& n,
                                                         long p, long s)
{
    if (p == 2)
        throw PNotOdd("ramanujan_check: p must be odd");
    const long d = lat.dim();
    const long ps = ipow(p, s);
    Cyclotomic lhs(ctx);
    const auto units = units_mod(ps);
    for (const auto& v : enumerate_cosets(lat, ps))
    {
        FracVec x(d);
        for (long i = 0; i < d; ++i)
            x[i] = Fraction(v[i]) + lambda[i];
        Fraction base = (lat.q_lift(x) - n) / Fraction(ps);
        for (long h : units)
            lhs += Cyclotomic::e(ctx, Fraction(h) * base);
    }
    Fraction g = moebius_sum(lat, lambda, n, p, s);
    Cyclotomic rhs(ctx, Fraction(mpz_class(ps)).pow(d) * g);
    return {lhs, rhs};
}

// Scaled variant: lhs sums v over L/p^lL with the q_{p^{2(s-l)}} congruence,
// rhs = p^{lD} G-tilde_{rho,n}(s)
inline std::pair<Cyclotomic, Cyclotomic> ramanujan_check_scaled(const CtxPtr& ctx,
                                                                const EvenLattice& lat,
                                                                const FracVec& rho,
                                                                const Fraction& n, long p, long s,
                                                                long l)
{
    if (p == 2)
        throw PNotOdd("ramanujan_check_scaled: p must be odd");
    const long d = lat.dim();
    const long ps = ipow(p, s);
    const long pl = ipow(p, l);
    const Fraction qscale(ipow(p, 2 * (s - l) > 0 ? 2 * (s - l) : 0));
    Cyclotomic lhs(ctx);
    const auto units = units_mod(ps);
    for (const auto& v : enumerate_cosets(lat, pl))
    {
        FracVec x(d);
        for (long i = 0; i < d; ++i)
            x[i] = Fraction(v[i]) + rho[i];
        Fraction base = (qscale * lat.q_lift(x) - n) / Fraction(ps);
        for (long h : units)
            lhs += Cyclotomic::e(ctx, Fraction(h) * base);
    }
    Fraction g = moebius_sum_scaled(lat, rho, n, p, s, l);
    Cyclotomic rhs(ctx, Fraction(mpz_class(pl)).pow(d) * g);
    return {lhs, rhs};
}

// Square-free support sieve for s > l: the coefficient survives iff
// n - q_{p^{2(s-l)}}(rho) lies in p^{2(s-l)} Z.
inline bool support_sieve(const EvenLattice& lat, const FracVec& rho, const Fraction& n, long p,
                          long s, long l)
{
    if (s <= l)
        throw RangeError("support_sieve: requires s > l");
    const long scaling = ipow(p, 2 * (s - l));
    Fraction diff = n - Fraction(scaling) * lat.q_lift(rho);
    if (!diff.is_integer())
        return false;
    return diff.numerator() % scaling == 0;
}

} // namespace fqweil
