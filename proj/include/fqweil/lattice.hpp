#pragma once

#include <algorithm>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fqweil/cyclotomic.hpp"
#include "fqweil/errors.hpp"
#include "fqweil/fraction.hpp"

namespace fqweil
{

// Enumeration budget: hard cap on coset counts so desk-scale runs stay
// desk-scale.  FQWEIL_BUDGET overrides.
inline long enumeration_budget()
{
    static long budget = [] {
        if (const char* env = std::getenv("FQWEIL_BUDGET"))
        {
            long v = std::atol(env);
            if (v > 0)
                return v;
        }
        return 10000000L;
    }();
    return budget;
}

using IntVec = std::vector<mpz_class>;
using IntMat = std::vector<std::vector<mpz_class>>;
using FracVec = std::vector<Fraction>;

/**
 * EvenLattice: free Z-module of rank D with an even symmetric Gram matrix.
 * q(x) = x^T G x / 2 and b(x,y) = x^T G y extend to rational coordinates;
 * those lifts are what every module-level form evaluates through.
 */
class EvenLattice
{
public:
    EvenLattice(IntMat gram, std::string name = "") : _gram(std::move(gram)), _name(std::move(name))
    {
        _dim = static_cast<long>(_gram.size());
        if (_dim == 0)
            throw DegenerateLattice("EvenLattice: empty Gram matrix");
        for (long i = 0; i < _dim; ++i)
        {
            if (static_cast<long>(_gram[i].size()) != _dim)
                throw DegenerateLattice("EvenLattice: Gram matrix not square");
            if (_gram[i][i] % 2 != 0)
                throw NotEven("EvenLattice: odd diagonal entry");
            for (long j = 0; j < _dim; ++j)
                if (_gram[i][j] != _gram[j][i])
                    throw DegenerateLattice("EvenLattice: Gram matrix not symmetric");
        }
        _det = determinant(_gram);
        if (_det == 0)
            throw DegenerateLattice("EvenLattice: Gram determinant is zero");
    }

    long dim() const { return _dim; }
    const IntMat& gram() const { return _gram; }
    const mpz_class& det() const { return _det; }
    const std::string& name() const { return _name; }

    Fraction q_lift(const FracVec& x) const
    {
        Fraction acc(0);
        for (long i = 0; i < _dim; ++i)
            for (long j = 0; j < _dim; ++j)
                acc += x[i] * x[j] * Fraction(_gram[i][j]);
        return acc / Fraction(2);
    }

    Fraction b_lift(const FracVec& x, const FracVec& y) const
    {
        Fraction acc(0);
        for (long i = 0; i < _dim; ++i)
            for (long j = 0; j < _dim; ++j)
                acc += x[i] * y[j] * Fraction(_gram[i][j]);
        return acc;
    }

    bool positive_definite() const
    {
        // leading principal minors all positive
        for (long k = 1; k <= _dim; ++k)
        {
            IntMat m(k, std::vector<mpz_class>(k));
            for (long i = 0; i < k; ++i)
                for (long j = 0; j < k; ++j)
                    m[i][j] = _gram[i][j];
            if (determinant(m) <= 0)
                return false;
        }
        return true;
    }

    static mpz_class determinant(const IntMat& m)
    {
        // Bareiss fraction-free elimination
        long n = static_cast<long>(m.size());
        IntMat a = m;
        mpz_class prev = 1;
        int sign = 1;
        for (long k = 0; k < n - 1; ++k)
        {
            if (a[k][k] == 0)
            {
                long piv = -1;
                for (long i = k + 1; i < n; ++i)
                    if (a[i][k] != 0)
                    {
                        piv = i;
                        break;
                    }
                if (piv < 0)
                    return 0;
                std::swap(a[k], a[piv]);
                sign = -sign;
            }
            for (long i = k + 1; i < n; ++i)
                for (long j = k + 1; j < n; ++j)
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            prev = a[k][k];
        }
        return sign * a[n - 1][n - 1];
    }

private:
    IntMat _gram;
    std::string _name;
    long _dim = 0;
    mpz_class _det;
};

using LatticePtr = std::shared_ptr<const EvenLattice>;

namespace detail
{

struct SmithResult
{
    std::vector<mpz_class> factors; // s_1 | s_2 | ... (all positive)
    IntMat P;                       // row-op accumulator:  P * M * Q = diag(factors)
    IntMat Q;                       // column-op accumulator
};

// Smith normal form by integer row/column reduction, pivoting on the
// smallest nonzero absolute value for determinism.
inline SmithResult smith(const IntMat& m0)
{
    long n = static_cast<long>(m0.size());
    IntMat a = m0;
    IntMat p(n, std::vector<mpz_class>(n, 0)), q(n, std::vector<mpz_class>(n, 0));
    for (long i = 0; i < n; ++i)
        p[i][i] = q[i][i] = 1;

    auto row_sub = [&](long dst, long src, const mpz_class& c) {
        for (long j = 0; j < n; ++j)
        {
            a[dst][j] -= c * a[src][j];
            p[dst][j] -= c * p[src][j];
        }
    };
    auto col_sub = [&](long dst, long src, const mpz_class& c) {
        for (long i = 0; i < n; ++i)
        {
            a[i][dst] -= c * a[i][src];
            q[i][dst] -= c * q[i][src];
        }
    };
    auto row_swap = [&](long i, long j) {
        if (i == j)
            return;
        std::swap(a[i], a[j]);
        std::swap(p[i], p[j]);
    };
    auto col_swap = [&](long i, long j) {
        if (i == j)
            return;
        for (long r = 0; r < n; ++r)
        {
            std::swap(a[r][i], a[r][j]);
            std::swap(q[r][i], q[r][j]);
        }
    };
    auto row_negate = [&](long i) {
        for (long j = 0; j < n; ++j)
        {
            a[i][j] = -a[i][j];
            p[i][j] = -p[i][j];
        }
    };

    auto diagonalize = [&]() {
        for (long t = 0; t < n; ++t)
        {
            long bi = -1, bj = -1;
            mpz_class best;
            for (long i = t; i < n; ++i)
                for (long j = t; j < n; ++j)
                    if (a[i][j] != 0)
                    {
                        mpz_class v = abs(a[i][j]);
                        if (bi < 0 || v < best)
                        {
                            best = v;
                            bi = i;
                            bj = j;
                        }
                    }
            if (bi < 0)
                break;
            row_swap(t, bi);
            col_swap(t, bj);

            bool again = true;
            while (again)
            {
                again = false;
                for (long i = t + 1; i < n; ++i)
                    if (a[i][t] != 0)
                    {
                        mpz_class c;
                        mpz_fdiv_q(c.get_mpz_t(), a[i][t].get_mpz_t(), a[t][t].get_mpz_t());
                        row_sub(i, t, c);
                        if (a[i][t] != 0)
                        {
                            row_swap(t, i);
                            again = true;
                        }
                    }
                for (long j = t + 1; j < n; ++j)
                    if (a[t][j] != 0)
                    {
                        mpz_class c;
                        mpz_fdiv_q(c.get_mpz_t(), a[t][j].get_mpz_t(), a[t][t].get_mpz_t());
                        col_sub(j, t, c);
                        if (a[t][j] != 0)
                        {
                            col_swap(t, j);
                            again = true;
                        }
                    }
            }
            if (a[t][t] < 0)
                row_negate(t);
        }
    };

    diagonalize();
    // enforce the divisibility chain; each fix introduces one off-diagonal
    // entry and re-diagonalizes
    bool fixed = true;
    while (fixed)
    {
        fixed = false;
        for (long t = 0; t + 1 < n; ++t)
            if (a[t][t] != 0 && a[t + 1][t + 1] % a[t][t] != 0)
            {
                col_sub(t, t + 1, -1); // col_t += col_{t+1}
                diagonalize();
                fixed = true;
                break;
            }
    }

    SmithResult r;
    r.factors.resize(n);
    for (long t = 0; t < n; ++t)
        r.factors[t] = a[t][t];
    r.P = std::move(p);
    r.Q = std::move(q);
    return r;
}

} // namespace detail

class ModuleElement;

/**
 * FqModule: the finite quadratic module L(n) attached to an even lattice and
 * a positive scale n.  Elements are rational coordinate cosets x + Z^D with
 * n*G*x integral; the form is q_n(x) = n * x^T G x / 2 mod 1.
 *
 * The Smith normal form of n*G fixes a generator decomposition and with it a
 * deterministic enumeration order.
 */
class FqModule : public std::enable_shared_from_this<FqModule>
{
public:
    FqModule(LatticePtr lattice, long scale) : _lattice(std::move(lattice)), _scale(scale)
    {
        if (scale <= 0)
            throw RangeError("FqModule: scale must be positive");
        const long d = _lattice->dim();
        IntMat m(d, std::vector<mpz_class>(d));
        for (long i = 0; i < d; ++i)
            for (long j = 0; j < d; ++j)
                m[i][j] = mpz_class(scale) * _lattice->gram()[i][j];
        auto snf = detail::smith(m);
        _P = std::move(snf.P);
        _factors = std::move(snf.factors);
        _order = 1;
        for (long i = 0; i < d; ++i)
            _order *= _factors[i];
        // generators: column i of Q divided by s_i (only nontrivial factors kept)
        for (long i = 0; i < d; ++i)
        {
            if (_factors[i] == 1)
                continue;
            _axes.push_back(i);
            FracVec g(d);
            for (long r = 0; r < d; ++r)
                g[static_cast<size_t>(r)] = Fraction(snf.Q[r][i], _factors[i]);
            _gens.push_back(std::move(g));
        }
        _nGram.resize(d, std::vector<mpz_class>(d));
        for (long i = 0; i < d; ++i)
            for (long j = 0; j < d; ++j)
                _nGram[i][j] = mpz_class(scale) * _lattice->gram()[i][j];
    }

    // Interned: one instance per (lattice instance, scale), so modules
    // compare by pointer and the Smith form is computed once.
    static std::shared_ptr<const FqModule> make(LatticePtr lattice, long scale)
    {
        static std::map<std::pair<const EvenLattice*, long>, std::weak_ptr<const FqModule>> cache;
        auto key = std::make_pair(lattice.get(), scale);
        auto it = cache.find(key);
        if (it != cache.end())
            if (auto hit = it->second.lock())
                return hit;
        auto fresh = std::make_shared<const FqModule>(std::move(lattice), scale);
        cache[key] = fresh;
        return fresh;
    }

    const LatticePtr& lattice() const { return _lattice; }
    long scale() const { return _scale; }
    long dim() const { return _lattice->dim(); }
    const mpz_class& order() const { return _order; }
    long axis_count() const { return static_cast<long>(_axes.size()); }
    const mpz_class& axis_order(long k) const { return _factors[_axes[static_cast<size_t>(k)]]; }
    // all invariant factors of n*Gram, including trivial ones
    const std::vector<mpz_class>& invariant_factors() const { return _factors; }

    bool contains_coords(const FracVec& x) const
    {
        const long d = dim();
        for (long i = 0; i < d; ++i)
        {
            Fraction acc(0);
            for (long j = 0; j < d; ++j)
                acc += Fraction(_nGram[i][j]) * x[j];
            if (!acc.is_integer())
                return false;
        }
        return true;
    }

    ModuleElement element_from_coords(const FracVec& x) const;
    ModuleElement element_from_gencoords(const std::vector<mpz_class>& c) const;
    ModuleElement zero() const;
    ModuleElement element_by_index(const mpz_class& index) const;
    std::vector<ModuleElement> enumerate() const;

    // q_n lift at exact coordinates (not reduced mod 1)
    Fraction q_lift_at(const FracVec& x) const { return Fraction(_scale) * _lattice->q_lift(x); }
    Fraction b_lift_at(const FracVec& x, const FracVec& y) const
    {
        return Fraction(_scale) * _lattice->b_lift(x, y);
    }

private:
    friend class ModuleElement;
    LatticePtr _lattice;
    long _scale;
    std::vector<mpz_class> _factors;
    IntMat _P;     // row-op accumulator from the SNF: gencoords via P*(nG*x)
    IntMat _nGram; // n * Gram
    std::vector<long> _axes;
    std::vector<FracVec> _gens;
    mpz_class _order;
};

using ModulePtr = std::shared_ptr<const FqModule>;

/**
 * ModuleElement: a coset of an FqModule.  Stores both canonical rational
 * coordinates (each in [0,1)) and generator coordinates; the latter give a
 * total enumeration index used as the deterministic ordering key.
 */
class ModuleElement
{
public:
    ModuleElement() = default;

    const ModulePtr& module() const { return _mod; }
    const FracVec& coords() const { return _coords; }
    const std::vector<mpz_class>& gencoords() const { return _gc; }
    const mpz_class& index() const { return _index; }

    bool is_zero() const { return _index == 0; }

    bool operator==(const ModuleElement& o) const
    {
        return _mod.get() == o._mod.get() && _index == o._index;
    }
    bool operator!=(const ModuleElement& o) const { return !(*this == o); }
    bool operator<(const ModuleElement& o) const { return _index < o._index; }

    ModuleElement operator+(const ModuleElement& o) const
    {
        require_same(o);
        std::vector<mpz_class> c(_gc.size());
        for (size_t k = 0; k < _gc.size(); ++k)
            c[k] = (_gc[k] + o._gc[k]) % axis(k);
        return _mod->element_from_gencoords(c);
    }
    ModuleElement operator-(const ModuleElement& o) const
    {
        require_same(o);
        std::vector<mpz_class> c(_gc.size());
        for (size_t k = 0; k < _gc.size(); ++k)
        {
            c[k] = (_gc[k] - o._gc[k]) % axis(k);
            if (c[k] < 0)
                c[k] += axis(k);
        }
        return _mod->element_from_gencoords(c);
    }
    ModuleElement operator-() const
    {
        std::vector<mpz_class> c(_gc.size());
        for (size_t k = 0; k < _gc.size(); ++k)
            c[k] = _gc[k] == 0 ? mpz_class(0) : axis(k) - _gc[k];
        return _mod->element_from_gencoords(c);
    }
    ModuleElement times(const mpz_class& m) const
    {
        std::vector<mpz_class> c(_gc.size());
        for (size_t k = 0; k < _gc.size(); ++k)
        {
            c[k] = (_gc[k] * m) % axis(k);
            if (c[k] < 0)
                c[k] += axis(k);
        }
        return _mod->element_from_gencoords(c);
    }

    // q_n value mod 1 (representative independent)
    Fraction q_value() const { return _mod->q_lift_at(_coords).mod1(); }
    // exact rational q_n at the canonical representative
    Fraction q_lift() const { return _mod->q_lift_at(_coords); }
    Fraction b_value(const ModuleElement& o) const
    {
        require_same(o);
        return _mod->b_lift_at(_coords, o._coords).mod1();
    }

    // Membership in the submodule L(d) of L(n), d | n: d*G*x integral.
    bool in_submodule(long d) const
    {
        const long dd = _mod->dim();
        for (long i = 0; i < dd; ++i)
        {
            Fraction acc(0);
            for (long j = 0; j < dd; ++j)
            {
                mpz_class m = mpz_class(d) * _mod->lattice()->gram()[i][j];
                acc += Fraction(m) * _coords[j];
            }
            if (!acc.is_integer())
                return false;
        }
        return true;
    }

private:
    friend class FqModule;
    ModuleElement(ModulePtr mod, FracVec coords, std::vector<mpz_class> gc)
        : _mod(std::move(mod)), _coords(std::move(coords)), _gc(std::move(gc))
    {
        _index = 0;
        mpz_class w = 1;
        for (size_t k = 0; k < _gc.size(); ++k)
        {
            _index += _gc[k] * w;
            w *= axis(k);
        }
    }
    const mpz_class& axis(size_t k) const { return _mod->axis_order(static_cast<long>(k)); }
    void require_same(const ModuleElement& o) const
    {
        if (_mod.get() != o._mod.get())
            throw ModuleMismatch("ModuleElement: elements of different modules");
    }

    ModulePtr _mod;
    FracVec _coords;
    std::vector<mpz_class> _gc;
    mpz_class _index = 0;
};

inline ModuleElement FqModule::element_from_gencoords(const std::vector<mpz_class>& c0) const
{
    const long d = dim();
    if (static_cast<long>(c0.size()) != axis_count())
        throw ModuleMismatch("element_from_gencoords: wrong coordinate count");
    std::vector<mpz_class> c = c0;
    for (long k = 0; k < axis_count(); ++k)
    {
        const mpz_class& s = axis_order(k);
        c[static_cast<size_t>(k)] %= s;
        if (c[static_cast<size_t>(k)] < 0)
            c[static_cast<size_t>(k)] += s;
    }
    FracVec x(d, Fraction(0));
    for (long k = 0; k < axis_count(); ++k)
    {
        const FracVec& g = _gens[static_cast<size_t>(k)];
        for (long r = 0; r < d; ++r)
            x[r] += Fraction(c[static_cast<size_t>(k)]) * g[r];
    }
    for (long r = 0; r < d; ++r)
        x[r] = x[r].mod1();
    return ModuleElement(shared_from_this(), std::move(x), std::move(c));
}

inline ModuleElement FqModule::element_from_coords(const FracVec& x) const
{
    const long d = dim();
    if (static_cast<long>(x.size()) != d)
        throw MembershipViolation("element_from_coords: wrong dimension");
    // y = nG*x must be integral (membership), then z = P*y, c_k = z mod s
    IntVec y(d);
    for (long i = 0; i < d; ++i)
    {
        Fraction acc(0);
        for (long j = 0; j < d; ++j)
            acc += Fraction(_nGram[i][j]) * x[j];
        if (!acc.is_integer())
            throw MembershipViolation("element_from_coords: coordinates not in the module");
        y[i] = acc.numerator();
    }
    std::vector<mpz_class> c;
    c.reserve(_axes.size());
    for (long k = 0; k < axis_count(); ++k)
    {
        long row = _axes[static_cast<size_t>(k)];
        mpz_class z = 0;
        for (long j = 0; j < d; ++j)
            z += _P[row][j] * y[j];
        const mpz_class& s = _factors[row];
        z %= s;
        if (z < 0)
            z += s;
        c.push_back(z);
    }
    return element_from_gencoords(c);
}

inline ModuleElement FqModule::zero() const
{
    return element_from_gencoords(std::vector<mpz_class>(static_cast<size_t>(axis_count()), 0));
}

inline ModuleElement FqModule::element_by_index(const mpz_class& index) const
{
    mpz_class rest = index;
    std::vector<mpz_class> c(static_cast<size_t>(axis_count()));
    for (long k = 0; k < axis_count(); ++k)
    {
        const mpz_class& s = axis_order(k);
        c[static_cast<size_t>(k)] = rest % s;
        rest /= s;
    }
    return element_from_gencoords(c);
}

inline std::vector<ModuleElement> FqModule::enumerate() const
{
    if (_order > enumeration_budget())
        throw BudgetExceeded("FqModule::enumerate: module order " + _order.get_str() +
                             " exceeds budget");
    std::vector<ModuleElement> out;
    out.reserve(_order.get_ui());
    for (mpz_class i = 0; i < _order; ++i)
        out.push_back(element_by_index(i));
    return out;
}

// --- free functions on modules -------------------------------------------

// representatives of L/aL as integer coordinate vectors (lex order)
inline std::vector<IntVec> enumerate_cosets(const EvenLattice& lattice, long a)
{
    const long d = lattice.dim();
    mpz_class total = pow_z(a, static_cast<unsigned long>(d));
    if (total > enumeration_budget())
        throw BudgetExceeded("enumerate_cosets: a^D exceeds budget");
    std::vector<IntVec> out;
    out.reserve(total.get_ui());
    IntVec v(d, 0);
    while (true)
    {
        out.push_back(v);
        long k = 0;
        while (k < d)
        {
            v[k] += 1;
            if (v[k] < a)
                break;
            v[k] = 0;
            ++k;
        }
        if (k == d)
            break;
    }
    return out;
}

// {n*mu : mu in module}
inline std::vector<ModuleElement> multiples_subgroup(const FqModule& mod, const mpz_class& n)
{
    std::vector<std::vector<mpz_class>> options;
    mpz_class count = 1;
    for (long k = 0; k < mod.axis_count(); ++k)
    {
        const mpz_class& s = mod.axis_order(k);
        mpz_class g = gcd(n, s);
        std::vector<mpz_class> opt;
        for (mpz_class c = 0; c < s; c += g)
            opt.push_back(c);
        count *= mpz_class(static_cast<long>(opt.size()));
        options.push_back(std::move(opt));
    }
    if (count > enumeration_budget())
        throw BudgetExceeded("multiples_subgroup: size exceeds budget");
    std::vector<ModuleElement> out;
    std::vector<size_t> idx(options.size(), 0);
    while (true)
    {
        std::vector<mpz_class> c(options.size());
        for (size_t k = 0; k < options.size(); ++k)
            c[k] = options[k][idx[k]];
        out.push_back(mod.element_from_gencoords(c));
        size_t k = 0;
        while (k < options.size())
        {
            if (++idx[k] < options[k].size())
                break;
            idx[k] = 0;
            ++k;
        }
        if (k == options.size() || options.empty())
            break;
    }
    return out;
}

// {mu : n*mu = 0}
inline std::vector<ModuleElement> torsion_subgroup(const FqModule& mod, const mpz_class& n)
{
    std::vector<std::vector<mpz_class>> options;
    mpz_class count = 1;
    for (long k = 0; k < mod.axis_count(); ++k)
    {
        const mpz_class& s = mod.axis_order(k);
        mpz_class g = gcd(n, s);
        mpz_class step = s / g;
        std::vector<mpz_class> opt;
        for (mpz_class c = 0; c < s; c += step)
            opt.push_back(c);
        count *= mpz_class(static_cast<long>(opt.size()));
        options.push_back(std::move(opt));
    }
    if (count > enumeration_budget())
        throw BudgetExceeded("torsion_subgroup: size exceeds budget");
    std::vector<ModuleElement> out;
    std::vector<size_t> idx(options.size(), 0);
    while (true)
    {
        std::vector<mpz_class> c(options.size());
        for (size_t k = 0; k < options.size(); ++k)
            c[k] = options[k][idx[k]];
        out.push_back(mod.element_from_gencoords(c));
        size_t k = 0;
        while (k < options.size())
        {
            if (++idx[k] < options[k].size())
                break;
            idx[k] = 0;
            ++k;
        }
        if (k == options.size() || options.empty())
            break;
    }
    return out;
}

// canonical (enumeration-first) mu with n*mu = lambda, if any
inline std::optional<ModuleElement> try_divide(const ModuleElement& lambda, const mpz_class& n)
{
    const FqModule& mod = *lambda.module();
    std::vector<mpz_class> c(lambda.gencoords().size());
    for (long k = 0; k < mod.axis_count(); ++k)
    {
        const mpz_class& s = mod.axis_order(k);
        const mpz_class& target = lambda.gencoords()[static_cast<size_t>(k)];
        mpz_class g = gcd(n, s);
        if (target % g != 0)
            return std::nullopt;
        mpz_class s2 = s / g;
        mpz_class inv;
        mpz_class ng = (n / g) % s2;
        if (mpz_invert(inv.get_mpz_t(), ng.get_mpz_t(), s2.get_mpz_t()) == 0)
            return std::nullopt; // unreachable: n/g coprime to s/g
        mpz_class d = ((target / g) * inv) % s2;
        if (d < 0)
            d += s2;
        c[static_cast<size_t>(k)] = d; // minimal residue -> minimal index
    }
    return lambda.module()->element_from_gencoords(c);
}

inline ModuleElement divide(const ModuleElement& lambda, const mpz_class& n)
{
    auto r = try_divide(lambda, n);
    if (!r)
        throw NonDivisible("divide: element has no preimage under multiplication by " +
                           n.get_str());
    return *r;
}

// all mu with n*mu = lambda (empty or a torsion coset), enumeration order
inline std::vector<ModuleElement> preimages(const ModuleElement& lambda, const mpz_class& n)
{
    auto base = try_divide(lambda, n);
    if (!base)
        return {};
    auto tor = torsion_subgroup(*lambda.module(), n);
    std::vector<ModuleElement> out;
    out.reserve(tor.size());
    for (const auto& t : tor)
        out.push_back(*base + t);
    std::sort(out.begin(), out.end());
    return out;
}

// sum over nu of e(b(nu, x)); |module| when x = 0, else 0 (orthogonality)
inline Cyclotomic char_sum(const CtxPtr& ctx, const FqModule& mod, const ModuleElement& x)
{
    Cyclotomic acc(ctx);
    for (const auto& nu : mod.enumerate())
        acc += Cyclotomic::e(ctx, nu.b_value(x));
    return acc;
}

} // namespace fqweil
