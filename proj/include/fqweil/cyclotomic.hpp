#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "fqweil/errors.hpp"
#include "fqweil/fraction.hpp"

namespace fqweil
{

namespace detail
{

// Exact division of integer polynomials: num / den with den monic-leading.
// Both dense, index = exponent.  Used only to build cyclotomic polynomials.
inline std::vector<mpz_class> poly_div_exact(std::vector<mpz_class> num,
                                             const std::vector<mpz_class>& den)
{
    const long dn = static_cast<long>(num.size()) - 1;
    const long dd = static_cast<long>(den.size()) - 1;
    std::vector<mpz_class> quot(static_cast<size_t>(dn - dd + 1), mpz_class(0));
    for (long e = dn - dd; e >= 0; --e)
    {
        mpz_class c = num[static_cast<size_t>(e + dd)] / den[static_cast<size_t>(dd)];
        quot[static_cast<size_t>(e)] = c;
        if (c != 0)
            for (long j = 0; j <= dd; ++j)
                num[static_cast<size_t>(e + j)] -= c * den[static_cast<size_t>(j)];
    }
    return quot;
}

} // namespace detail

/**
 * CycloContext: fixed cyclotomic field Q(zeta_M).  Holds the M-th cyclotomic
 * polynomial and precomputed sparse reduction rows x^e mod Phi_M for
 * e in [phi(M), M), so that every Cyclotomic value can be kept in the
 * canonical power basis 1, x, ..., x^{phi-1}.
 *
 * Immutable after construction; share via shared_ptr.
 */
class CycloContext
{
public:
    using Row = std::vector<std::pair<long, mpz_class>>; // x^e == sum c_j x^j

    explicit CycloContext(long order) : _order(order)
    {
        if (order <= 0)
            throw IncompatibleOrder("CycloContext: order must be positive");
        build();
    }

    static std::shared_ptr<const CycloContext> make(long order)
    {
        return std::make_shared<const CycloContext>(order);
    }

    long order() const { return _order; }
    long phi() const { return _phi; }

    const Row& reduction_row(long e) const { return _rows[static_cast<size_t>(e - _phi)]; }

    // Smallest order divisible by 8, by every entry of `denoms`, and by 4p for
    // every odd prime p in `sqrt_primes` (8 covers p = 2).
    static long suggest_order(const std::vector<long>& denoms, const std::vector<long>& sqrt_primes)
    {
        mpz_class m = 8;
        for (long d : denoms)
            if (d > 0)
                m = lcm(m, mpz_class(d));
        for (long p : sqrt_primes)
            if (p > 2)
                m = lcm(m, mpz_class(4 * p));
        if (!m.fits_slong_p())
            throw IncompatibleOrder("CycloContext::suggest_order: order overflow");
        return m.get_si();
    }

private:
    void build()
    {
        // Phi_d for all divisors d of M, ascending, by exact division of x^d - 1.
        std::vector<long> divs;
        for (long d = 1; d <= _order; ++d)
            if (_order % d == 0)
                divs.push_back(d);
        std::map<long, std::vector<mpz_class>> phi_polys;
        for (long d : divs)
        {
            std::vector<mpz_class> num(static_cast<size_t>(d + 1), mpz_class(0));
            num[0] = -1;
            num[static_cast<size_t>(d)] = 1;
            for (long e : divs)
            {
                if (e >= d || d % e != 0)
                    continue;
                num = detail::poly_div_exact(std::move(num), phi_polys[e]);
            }
            phi_polys[d] = std::move(num);
        }
        _phi_poly = phi_polys[_order];
        _phi = static_cast<long>(_phi_poly.size()) - 1;

        // Rows x^e mod Phi_M for e in [phi, M), built by repeated shift.
        _rows.resize(static_cast<size_t>(_order - _phi));
        std::map<long, mpz_class> cur; // x^phi = -(Phi - x^phi)
        for (long j = 0; j < _phi; ++j)
            if (_phi_poly[static_cast<size_t>(j)] != 0)
                cur[j] = -_phi_poly[static_cast<size_t>(j)];
        store_row(0, cur);
        for (long e = _phi + 1; e < _order; ++e)
        {
            std::map<long, mpz_class> next;
            for (const auto& [j, c] : cur)
            {
                if (j + 1 < _phi)
                    next[j + 1] += c;
                else
                {
                    // x^phi expands through row 0
                    for (const auto& [j2, c2] : _rows[0])
                        next[j2] += c * c2;
                }
            }
            for (auto it = next.begin(); it != next.end();)
                it = (it->second == 0) ? next.erase(it) : std::next(it);
            store_row(e - _phi, next);
            cur = std::move(next);
        }
    }

    void store_row(long idx, const std::map<long, mpz_class>& m)
    {
        Row r;
        r.reserve(m.size());
        for (const auto& [j, c] : m)
            if (c != 0)
                r.emplace_back(j, c);
        _rows[static_cast<size_t>(idx)] = std::move(r);
    }

    long _order;
    long _phi = 0;
    std::vector<mpz_class> _phi_poly;
    std::vector<Row> _rows;
};

using CtxPtr = std::shared_ptr<const CycloContext>;

/**
 * Cyclotomic: exact element of Q(zeta_M) in the canonical power basis.
 * Zero is the empty map; equality is coefficient-map equality.
 */
class Cyclotomic
{
public:
    Cyclotomic() = default;
    explicit Cyclotomic(CtxPtr ctx) : _ctx(std::move(ctx)) {}
    Cyclotomic(CtxPtr ctx, const Fraction& rational) : _ctx(std::move(ctx))
    {
        if (!rational.is_zero())
            _c[0] = rational;
    }

    // e(x) = exp(2*pi*i*x), exact.  Denominator of x must divide the order.
    static Cyclotomic e(const CtxPtr& ctx, const Fraction& x)
    {
        const long M = ctx->order();
        if (mpz_class(M) % x.denominator() != 0)
            throw IncompatibleOrder("e_of: denominator " + x.denominator().get_str() +
                                    " does not divide context order " + std::to_string(M));
        mpz_class kz = x.numerator() * (M / x.denominator());
        mpz_class km = kz % M;
        if (km < 0)
            km += M;
        Cyclotomic r(ctx);
        r.add_power(km.get_si(), Fraction(1));
        return r;
    }

    // Positive real sqrt(p) for p prime, via the quadratic Gauss sum.
    // Requires 4p | order (8 | order for p = 2).
    static Cyclotomic sqrt_prime(const CtxPtr& ctx, long p)
    {
        const long M = ctx->order();
        if (p == 2)
        {
            if (M % 8 != 0)
                throw IncompatibleOrder("sqrt_prime(2): context order not divisible by 8");
            return e(ctx, Fraction(1, 8)) + e(ctx, Fraction(-1, 8));
        }
        if (p < 3 || M % (4 * p) != 0)
            throw IncompatibleOrder("sqrt_prime: context order not divisible by 4p");
        Cyclotomic g(ctx);
        for (long a = 0; a < p; ++a)
            g += e(ctx, Fraction(a * a, p));
        if (p % 4 == 3)
            g *= e(ctx, Fraction(-1, 4)); // divide out i
        return g;
    }

    // base^exponent for a prime-power base and half-integral exponent.
    static Cyclotomic power_half(const CtxPtr& ctx, long base, const Fraction& exponent)
    {
        if (base <= 0)
            throw UnsupportedExponent("power_half: base must be positive");
        if (exponent.denominator() != 1 && exponent.denominator() != 2)
            throw UnsupportedExponent("power_half: exponent denominator must be 1 or 2");
        // factor prime power
        long p = 0, m = 0, b = base;
        if (b == 1)
            return Cyclotomic(ctx, Fraction(1));
        for (long q = 2; q * q <= b; ++q)
            if (b % q == 0)
            {
                p = q;
                break;
            }
        if (p == 0)
            p = b;
        while (b > 1)
        {
            if (b % p != 0)
                throw UnsupportedExponent("power_half: base is not a prime power");
            b /= p;
            ++m;
        }
        // base^exponent = p^(m*exponent)
        Fraction total = Fraction(m) * exponent;
        mpz_class twice = total.numerator() * (2 / total.denominator());
        // total = twice/2; split integer and half parts
        mpz_class ipart;
        mpz_fdiv_q_ui(ipart.get_mpz_t(), twice.get_mpz_t(), 2);
        bool half = (twice % 2 != 0);
        Fraction rat = Fraction(mpz_class(p)).pow(ipart.get_si());
        Cyclotomic out(ctx, rat);
        if (half)
            out *= sqrt_prime(ctx, p);
        return out;
    }

    // sqrt of a positive integer, as a product over its prime factorization.
    static Cyclotomic sqrt_posint(const CtxPtr& ctx, const mpz_class& n)
    {
        if (n <= 0)
            throw RangeError("sqrt_posint: argument must be positive");
        Cyclotomic out(ctx, Fraction(1));
        mpz_class rest = n;
        for (mpz_class q = 2; q * q <= rest; ++q)
        {
            long e = 0;
            while (rest % q == 0)
            {
                rest /= q;
                ++e;
            }
            if (e)
                out *= power_half(ctx, q.get_si(), Fraction(e, 2));
        }
        if (rest > 1)
            out *= power_half(ctx, rest.get_si(), Fraction(1, 2));
        return out;
    }

    const CtxPtr& context() const { return _ctx; }
    bool is_zero() const { return _c.empty(); }
    const std::map<long, Fraction>& coeffs() const { return _c; }

    bool is_rational() const { return _c.empty() || (_c.size() == 1 && _c.begin()->first == 0); }
    Fraction rational_value() const
    {
        if (_c.empty())
            return Fraction(0);
        if (!is_rational())
            throw RangeError("rational_value: value is not rational");
        return _c.begin()->second;
    }

    Cyclotomic operator-() const
    {
        Cyclotomic r(_ctx);
        for (const auto& [e, c] : _c)
            r._c[e] = -c;
        return r;
    }

    Cyclotomic& operator+=(const Cyclotomic& o)
    {
        check_ctx(o);
        if (!_ctx)
            _ctx = o._ctx;
        for (const auto& [e, c] : o._c)
        {
            auto it = _c.find(e);
            if (it == _c.end())
                _c.emplace(e, c);
            else
            {
                it->second += c;
                if (it->second.is_zero())
                    _c.erase(it);
            }
        }
        return *this;
    }
    Cyclotomic operator+(const Cyclotomic& o) const
    {
        Cyclotomic r = *this;
        r += o;
        return r;
    }
    Cyclotomic& operator-=(const Cyclotomic& o)
    {
        *this += -o;
        return *this;
    }
    Cyclotomic operator-(const Cyclotomic& o) const
    {
        Cyclotomic r = *this;
        r -= o;
        return r;
    }

    Cyclotomic& operator*=(const Cyclotomic& o)
    {
        *this = *this * o;
        return *this;
    }
    Cyclotomic operator*(const Cyclotomic& o) const
    {
        check_ctx(o);
        CtxPtr ctx = _ctx ? _ctx : o._ctx;
        Cyclotomic r(ctx);
        if (_c.empty() || o._c.empty())
            return r;
        const long M = ctx->order();
        for (const auto& [e1, c1] : _c)
            for (const auto& [e2, c2] : o._c)
            {
                long e = e1 + e2;
                if (e >= M)
                    e -= M;
                r.add_power(e, c1 * c2);
            }
        return r;
    }

    Cyclotomic operator*(const Fraction& s) const
    {
        Cyclotomic r(_ctx);
        if (s.is_zero())
            return r;
        for (const auto& [e, c] : _c)
            r._c[e] = c * s;
        return r;
    }
    Cyclotomic& operator*=(const Fraction& s)
    {
        *this = *this * s;
        return *this;
    }

    bool operator==(const Cyclotomic& o) const
    {
        if (_c.size() != o._c.size())
            return false;
        return _c == o._c;
    }
    bool operator!=(const Cyclotomic& o) const { return !(*this == o); }

    // Complex conjugate: zeta^i -> zeta^{M-i}.
    Cyclotomic conjugate() const
    {
        if (!_ctx)
            return *this;
        const long M = _ctx->order();
        Cyclotomic r(_ctx);
        for (const auto& [e, c] : _c)
            r.add_power(e == 0 ? 0 : M - e, c);
        return r;
    }

    // Multiplicative inverse.  Monomials invert cheaply; the general case
    // runs the extended Euclid algorithm against Phi_M over Q.
    Cyclotomic inverse() const
    {
        if (is_zero())
            throw DivisionByZero("Cyclotomic::inverse: zero");
        if (_c.size() == 1)
        {
            auto [e, c] = *_c.begin();
            const long M = _ctx->order();
            Cyclotomic r(_ctx);
            r.add_power(e == 0 ? 0 : M - e, Fraction(1) / c);
            return r;
        }
        return general_inverse();
    }

    Cyclotomic pow(long e) const
    {
        if (e < 0)
            return inverse().pow(-e);
        Cyclotomic base = *this;
        Cyclotomic acc(_ctx, Fraction(1));
        while (e > 0)
        {
            if (e & 1)
                acc *= base;
            base *= base;
            e >>= 1;
        }
        return acc;
    }

    // Re-express in a larger context whose order this order divides.
    Cyclotomic embed(const CtxPtr& big) const
    {
        if (!_ctx)
            return Cyclotomic(big);
        const long m = _ctx->order(), M = big->order();
        if (M % m != 0)
            throw IncompatibleOrder("embed: target order not a multiple");
        const long k = M / m;
        Cyclotomic r(big);
        for (const auto& [e, c] : _c)
            r.add_power(e * k, c);
        return r;
    }

    std::string str() const
    {
        if (_c.empty())
            return "0";
        std::string s;
        for (const auto& [e, c] : _c)
        {
            if (!s.empty())
                s += " + ";
            s += c.str();
            if (e > 0)
                s += "*z^" + std::to_string(e);
        }
        return s;
    }

    // Adds c * zeta^e (0 <= e < order), applying canonical reduction.
    void add_power(long e, const Fraction& c)
    {
        if (c.is_zero())
            return;
        if (e < _ctx->phi())
        {
            auto it = _c.find(e);
            if (it == _c.end())
                _c.emplace(e, c);
            else
            {
                it->second += c;
                if (it->second.is_zero())
                    _c.erase(it);
            }
            return;
        }
        for (const auto& [j, cz] : _ctx->reduction_row(e))
        {
            Fraction add = c * Fraction(cz);
            auto it = _c.find(j);
            if (it == _c.end())
                _c.emplace(j, add);
            else
            {
                it->second += add;
                if (it->second.is_zero())
                    _c.erase(it);
            }
        }
    }

private:
    void check_ctx(const Cyclotomic& o) const
    {
        if (_ctx && o._ctx && _ctx->order() != o._ctx->order())
            throw IncompatibleOrder("Cyclotomic: mixed context orders " +
                                    std::to_string(_ctx->order()) + " vs " +
                                    std::to_string(o._ctx->order()));
    }

    Cyclotomic general_inverse() const
    {
        // extended Euclid over Q[x]: u*a + v*Phi = gcd = nonzero rational
        using Poly = std::vector<Fraction>;
        auto deg = [](const Poly& p) -> long {
            for (long i = static_cast<long>(p.size()) - 1; i >= 0; --i)
                if (!p[static_cast<size_t>(i)].is_zero())
                    return i;
            return -1;
        };
        auto trim = [&](Poly& p) { p.resize(static_cast<size_t>(deg(p) + 1)); };

        const long phi = _ctx->phi();
        Poly a(static_cast<size_t>(phi), Fraction(0));
        for (const auto& [e, c] : _c)
            a[static_cast<size_t>(e)] = c;
        trim(a);
        Poly b; // Phi_M
        b.reserve(static_cast<size_t>(phi + 1));
        {
            Cyclotomic probe(_ctx); // reconstruct Phi from row 0: x^phi + row-negation
            const auto& row = _ctx->reduction_row(phi);
            Poly tmp(static_cast<size_t>(phi + 1), Fraction(0));
            tmp[static_cast<size_t>(phi)] = Fraction(1);
            for (const auto& [j, c] : row)
                tmp[static_cast<size_t>(j)] = Fraction(mpz_class(-c));
            b = std::move(tmp);
        }

        Poly r0 = b, r1 = a;
        Poly s0{Fraction(0)}, s1{Fraction(1)}; // coefficients of `a`
        while (deg(r1) > 0)
        {
            // divide r0 by r1
            Poly q(static_cast<size_t>(std::max<long>(deg(r0) - deg(r1) + 1, 1)), Fraction(0));
            Poly rem = r0;
            while (deg(rem) >= deg(r1))
            {
                long d = deg(rem) - deg(r1);
                Fraction c = rem[static_cast<size_t>(deg(rem))] / r1[static_cast<size_t>(deg(r1))];
                q[static_cast<size_t>(d)] += c;
                for (long j = 0; j <= deg(r1); ++j)
                    rem[static_cast<size_t>(j + d)] -= c * r1[static_cast<size_t>(j)];
                trim(rem);
                if (deg(rem) < 0)
                    break;
            }
            // s2 = s0 - q*s1
            Poly s2(std::max(s0.size(), q.size() + s1.size()), Fraction(0));
            for (size_t i = 0; i < s0.size(); ++i)
                s2[i] = s0[i];
            for (size_t i = 0; i < q.size(); ++i)
                if (!q[i].is_zero())
                    for (size_t j = 0; j < s1.size(); ++j)
                        s2[i + j] -= q[i] * s1[j];
            trim(s2);
            r0 = std::move(r1);
            r1 = std::move(rem);
            s0 = std::move(s1);
            s1 = std::move(s2);
            if (deg(r1) < 0)
                throw DivisionByZero("Cyclotomic::inverse: zero divisor (not a unit?)");
        }
        // r1 is a nonzero constant: inverse = s1 / r1
        Fraction c0 = r1[0];
        Cyclotomic inv(_ctx);
        for (size_t i = 0; i < s1.size(); ++i)
            if (!s1[i].is_zero())
                inv.add_power(static_cast<long>(i), s1[i] / c0);
        return inv;
    }

    CtxPtr _ctx;
    std::map<long, Fraction> _c;
};

inline Cyclotomic operator*(const Fraction& s, const Cyclotomic& v) { return v * s; }

} // namespace fqweil
