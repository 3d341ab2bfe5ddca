#pragma once

#include <map>
#include <utility>
#include <vector>

#include "fqweil/cyclotomic.hpp"
#include "fqweil/errors.hpp"
#include "fqweil/lattice.hpp"

namespace fqweil
{

/// Exponent -> coefficient slice of a single vector component.
using ComponentSeries = std::map<Fraction, Cyclotomic>;

// c*q^e  ->  c * e((e*t)/s) * q^(e*r/s)   (argument substitution (r tau + t)/s)
inline ComponentSeries substitute(const ComponentSeries& series, const CtxPtr& ctx, long r, long t,
                                  long s)
{
    if (s < 1)
        throw RangeError("substitute: s must be >= 1");
    ComponentSeries out;
    for (const auto& [e, c] : series)
    {
        Fraction out_exp = e * Fraction(r, s);
        Cyclotomic phased = c * Cyclotomic::e(ctx, e * Fraction(t, s));
        if (phased.is_zero())
            continue;
        auto it = out.find(out_exp);
        if (it == out.end())
            out.emplace(out_exp, phased);
        else
        {
            it->second += phased;
            if (it->second.is_zero())
                out.erase(it);
        }
    }
    return out;
}

// input precision needed so every output exponent below N is exact under a
// degree-n^2 operator (worst stratum r=1, s=n^2)
inline Fraction required_input_precision(const Fraction& output_precision, long n_squared)
{
    return output_precision * Fraction(n_squared);
}

/**
 * VVExpansion: truncated vector-valued q-expansion over a finite quadratic
 * module.  Coefficients are exact cyclotomic scalars keyed by (component,
 * exponent); all exponents n satisfy n >= 0, n < precision and
 * n == q(component) mod 1.  Missing keys are exact zeros, so the expansion
 * is exhaustive below its precision.
 */
class VVExpansion
{
public:
    struct Key
    {
        mpz_class comp;
        Fraction exp;
        bool operator<(const Key& o) const
        {
            if (comp != o.comp)
                return comp < o.comp;
            return exp < o.exp;
        }
        bool operator==(const Key& o) const { return comp == o.comp && exp == o.exp; }
    };

    VVExpansion() = default;
    VVExpansion(ModulePtr module, Fraction weight, Fraction precision, CtxPtr ctx)
        : _module(std::move(module)), _weight(std::move(weight)),
          _precision(std::move(precision)), _ctx(std::move(ctx))
    {
        if (_precision.sign() < 0)
            throw RangeError("VVExpansion: negative precision");
    }

    const ModulePtr& module() const { return _module; }
    const Fraction& weight() const { return _weight; }
    const Fraction& precision() const { return _precision; }
    const CtxPtr& context() const { return _ctx; }
    const std::map<Key, Cyclotomic>& coeffs() const { return _c; }
    bool is_zero() const { return _c.empty(); }

    void add(const ModuleElement& comp, const Fraction& exp, const Cyclotomic& value)
    {
        if (value.is_zero())
            return;
        if (exp.sign() < 0)
            throw PrecisionViolation("VVExpansion::add: negative exponent");
        if (exp >= _precision)
            throw PrecisionViolation("VVExpansion::add: exponent beyond precision");
        if ((exp - comp.q_value()).mod1() != Fraction(0))
            throw PrecisionViolation("VVExpansion::add: exponent violates n == q(component) mod 1");
        Key k{comp.index(), exp};
        auto it = _c.find(k);
        if (it == _c.end())
            _c.emplace(k, value);
        else
        {
            it->second += value;
            if (it->second.is_zero())
                _c.erase(it);
        }
    }

    // exact coefficient; zero when absent; beyond-precision reads are errors
    Cyclotomic coefficient(const ModuleElement& comp, const Fraction& exp) const
    {
        if (exp >= _precision)
            throw PrecisionInsufficient("VVExpansion::coefficient: exponent " + exp.str() +
                                        " beyond precision " + _precision.str());
        auto it = _c.find(Key{comp.index(), exp});
        return it == _c.end() ? Cyclotomic(_ctx) : it->second;
    }

    ComponentSeries component(const ModuleElement& comp) const
    {
        ComponentSeries out;
        auto lo = _c.lower_bound(Key{comp.index(), Fraction(0)});
        for (auto it = lo; it != _c.end() && it->first.comp == comp.index(); ++it)
            out.emplace(it->first.exp, it->second);
        return out;
    }

    std::vector<mpz_class> component_indices() const
    {
        std::vector<mpz_class> out;
        for (const auto& [k, v] : _c)
            if (out.empty() || out.back() != k.comp)
                out.push_back(k.comp);
        return out;
    }

    VVExpansion truncated(const Fraction& new_precision) const
    {
        VVExpansion out(_module, _weight, new_precision, _ctx);
        for (const auto& [k, v] : _c)
            if (k.exp < new_precision)
                out._c.emplace(k, v);
        return out;
    }

    VVExpansion scaled(const Cyclotomic& factor) const
    {
        VVExpansion out(_module, _weight, _precision, _ctx);
        if (factor.is_zero())
            return out;
        for (const auto& [k, v] : _c)
        {
            Cyclotomic w = v * factor;
            if (!w.is_zero())
                out._c.emplace(k, w);
        }
        return out;
    }
    VVExpansion scaled(const Fraction& factor) const { return scaled(Cyclotomic(_ctx, factor)); }

    friend VVExpansion combine(const VVExpansion& a, const Cyclotomic& ca, const VVExpansion& b,
                               const Cyclotomic& cb)
    {
        if (a._module.get() != b._module.get())
            throw ModuleMismatch("combine: different modules");
        if (a._weight != b._weight)
            throw WeightMismatch("combine: different weights");
        Fraction prec = a._precision < b._precision ? a._precision : b._precision;
        VVExpansion out(a._module, a._weight, prec, a._ctx);
        auto pour = [&](const VVExpansion& src, const Cyclotomic& c) {
            for (const auto& [k, v] : src._c)
            {
                if (!(k.exp < prec))
                    continue;
                Cyclotomic w = v * c;
                if (w.is_zero())
                    continue;
                auto it = out._c.find(k);
                if (it == out._c.end())
                    out._c.emplace(k, w);
                else
                {
                    it->second += w;
                    if (it->second.is_zero())
                        out._c.erase(it);
                }
            }
        };
        pour(a, ca);
        pour(b, cb);
        return out;
    }

    VVExpansion operator+(const VVExpansion& o) const
    {
        Cyclotomic one(_ctx, Fraction(1));
        return combine(*this, one, o, one);
    }
    VVExpansion operator-(const VVExpansion& o) const
    {
        return combine(*this, Cyclotomic(_ctx, Fraction(1)), o, Cyclotomic(_ctx, Fraction(-1)));
    }

    struct Mismatch
    {
        mpz_class comp;
        Fraction exp;
        Cyclotomic lhs, rhs;
    };

    // exact differing coefficients after truncating both to min precision
    friend std::vector<Mismatch> compare(const VVExpansion& a, const VVExpansion& b)
    {
        if (a._module.get() != b._module.get())
            throw ModuleMismatch("compare: different modules");
        Fraction prec = a._precision < b._precision ? a._precision : b._precision;
        std::vector<Mismatch> out;
        auto ia = a._c.begin(), ib = b._c.begin();
        while (ia != a._c.end() || ib != b._c.end())
        {
            bool take_a = ib == b._c.end() ||
                          (ia != a._c.end() && (ia->first < ib->first || ia->first == ib->first));
            if (ia != a._c.end() && ib != b._c.end() && ia->first == ib->first)
            {
                if (ia->first.exp < prec && ia->second != ib->second)
                    out.push_back({ia->first.comp, ia->first.exp, ia->second, ib->second});
                ++ia;
                ++ib;
            }
            else if (take_a)
            {
                if (ia->first.exp < prec)
                    out.push_back({ia->first.comp, ia->first.exp, ia->second,
                                   Cyclotomic(a._ctx)});
                ++ia;
            }
            else
            {
                if (ib->first.exp < prec)
                    out.push_back({ib->first.comp, ib->first.exp, Cyclotomic(b._ctx),
                                   ib->second});
                ++ib;
            }
        }
        return out;
    }

private:
    ModulePtr _module;
    Fraction _weight;
    Fraction _precision;
    CtxPtr _ctx;
    std::map<Key, Cyclotomic> _c;
};

/**
 * Vector-valued theta series of a positive-definite even lattice, with
 * c(lambda, n) = #{x in lambda + L : q(x) = n} for n < precision, weight D/2.
 * Dual-lattice points are enumerated by exact rational Cholesky descent
 * (no floating point, no reduction theory).
 */
inline VVExpansion theta_series(const CtxPtr& ctx, const LatticePtr& lattice,
                                const Fraction& precision)
{
    if (!lattice->positive_definite())
        throw NotPositiveDefinite("theta_series: Gram matrix must be positive definite");
    if (precision < Fraction(1))
        throw RangeError("theta_series: precision must be >= 1");
    const long d = lattice->dim();
    auto module = FqModule::make(lattice, 1);
    VVExpansion out(module, Fraction(d, 2), precision, ctx);

    // inverse Gram as exact fractions (Gauss-Jordan)
    std::vector<FracVec> inv(d, FracVec(d, Fraction(0)));
    {
        std::vector<FracVec> a(d, FracVec(2 * d, Fraction(0)));
        for (long i = 0; i < d; ++i)
        {
            for (long j = 0; j < d; ++j)
                a[i][j] = Fraction(lattice->gram()[i][j]);
            a[i][d + i] = Fraction(1);
        }
        for (long col = 0; col < d; ++col)
        {
            long piv = -1;
            for (long i = col; i < d; ++i)
                if (!a[i][col].is_zero())
                {
                    piv = i;
                    break;
                }
            std::swap(a[col], a[static_cast<size_t>(piv)]);
            Fraction f = a[col][col];
            for (long j = 0; j < 2 * d; ++j)
                a[col][j] = a[col][j] / f;
            for (long i = 0; i < d; ++i)
                if (i != col && !a[i][col].is_zero())
                {
                    Fraction g = a[i][col];
                    for (long j = 0; j < 2 * d; ++j)
                        a[i][j] -= g * a[col][j];
                }
        }
        for (long i = 0; i < d; ++i)
            for (long j = 0; j < d; ++j)
                inv[i][j] = a[i][d + j];
    }

    // Cholesky data for Q(m) = m^T G^{-1} m = sum_i diag_i (m_i + sum_{j>i} u_ij m_j)^2
    std::vector<FracVec> u(d, FracVec(d, Fraction(0)));
    FracVec diag(d, Fraction(0));
    {
        std::vector<FracVec> a = inv;
        for (long i = 0; i < d; ++i)
        {
            diag[i] = a[i][i];
            for (long j = i + 1; j < d; ++j)
                u[i][j] = a[i][j] / a[i][i];
            for (long k = i + 1; k < d; ++k)
                for (long l = i + 1; l < d; ++l)
                    a[k][l] -= a[i][k] * a[i][l] / a[i][i];
        }
    }

    const Fraction bound = Fraction(2) * precision; // Q(m) < 2N
    IntVec m(d, 0);
    std::map<std::vector<std::string>, ModuleElement> class_cache;

    // depth-first over coordinates d-1 .. 0; rem = bound - partial sum
    auto record = [&](const IntVec& mm, const Fraction& qval) {
        // y = G^{-1} m; class = y mod 1
        FracVec y(d, Fraction(0));
        for (long i = 0; i < d; ++i)
        {
            Fraction acc(0);
            for (long j = 0; j < d; ++j)
                acc += inv[i][j] * Fraction(mm[j]);
            y[i] = acc;
        }
        std::vector<std::string> key(d);
        FracVec red(d);
        for (long i = 0; i < d; ++i)
        {
            red[i] = y[i].mod1();
            key[i] = red[i].str();
        }
        auto it = class_cache.find(key);
        if (it == class_cache.end())
            it = class_cache.emplace(key, module->element_from_coords(red)).first;
        out.add(it->second, qval, Cyclotomic(ctx, Fraction(1)));
    };

    struct Frame
    {
        long level;
        Fraction rem;    // remaining budget for levels <= level
        Fraction center; // sum_{j>level} u_{level,j} m_j
    };
    // recursive lambda via explicit recursion
    auto descend = [&](auto&& self, long level, const Fraction& rem) -> void {
        if (level < 0)
        {
            Fraction qval = (bound - rem) / Fraction(2);
            if (qval < precision)
                record(m, qval);
            return;
        }
        Fraction center(0);
        for (long j = level + 1; j < d; ++j)
            center += u[level][j] * Fraction(m[j]);
        // d_level (m + center)^2 <= rem
        Fraction radius2 = rem / diag[level];
        mpz_class approx = isqrt_floor(radius2);
        mpz_class base = (-center).floor();
        mpz_class lo = base - approx - 2, hi = base + approx + 2;
        auto fits = [&](const mpz_class& mi) {
            Fraction t = Fraction(mi) + center;
            return diag[level] * t * t <= rem;
        };
        while (lo <= hi && !fits(lo))
            ++lo;
        while (hi >= lo && !fits(hi))
            --hi;
        for (mpz_class mi = lo; mi <= hi; ++mi)
        {
            m[level] = mi.get_si();
            Fraction t = Fraction(mi) + center;
            self(self, level - 1, rem - diag[level] * t * t);
        }
        m[level] = 0;
    };
    descend(descend, d - 1, bound);
    return out;
}

} // namespace fqweil
