#pragma once

#include <map>
#include <utility>
#include <vector>

#include "fqweil/cyclotomic.hpp"
#include "fqweil/errors.hpp"
#include "fqweil/lattice.hpp"
#include "fqweil/repnums.hpp"

namespace fqweil
{

/**
 * The corrected Weil-representation action rho_L(beta_{h,s}): the closed
 * two-branch formula, an independent oracle built from the proof's starting
 * expression (the triple sum over rho, nu and delta in L(p^s)), and the
 * falsifier producing a concrete counterexample to the uncorrected
 * Gauss-sum identity.
 */
struct BetaParams
{
    long p; // odd prime
    long l;
    long s; // 1 <= s <= 2l-1
    long h; // unit mod p^s
    mpz_class r, t; // bezout pair: r*p^s - h*t = 1, normalized 0 <= t < p^s

    BetaParams(long p_, long l_, long s_, long h_) : p(p_), l(l_), s(s_), h(h_)
    {
        if (p == 2)
            throw PNotOdd("BetaParams: p must be odd");
        if (p < 3)
            throw RangeError("BetaParams: p must be an odd prime");
        if (l < 1 || s < 1 || s >= 2 * l)
            throw RangeError("BetaParams: need 1 <= s <= 2l-1");
        const long ps = ipow(p, s);
        mpz_class hh = ((h % ps) + ps) % ps;
        if (gcd(hh, mpz_class(ps)) != 1)
            throw RangeError("BetaParams: h must be a unit mod p^s");
        // solve r*p^s - h*t = 1
        mpz_class g, u, v; // u*p^s + v*h = 1
        mpz_gcdext(g.get_mpz_t(), u.get_mpz_t(), v.get_mpz_t(), mpz_class(ps).get_mpz_t(),
                   hh.get_mpz_t());
        // t = -v mod p^s, then r = (1 + h*t)/p^s
        t = ((-v) % ps + ps) % ps;
        r = (1 + hh * t) / ps;
        if (r * ps - hh * t != 1)
            throw RangeError("BetaParams: bezout construction failed");
    }

    // alternative pair (r+h, t+p^s); the action must not depend on the choice
    BetaParams with_shifted_bezout() const
    {
        BetaParams b = *this;
        b.r = r + h;
        b.t = t + ipow(p, s);
        return b;
    }
};

/**
 * Column-sparse matrix over the cyclotomic field, rows/columns indexed by
 * the deterministic enumeration of the module.  Absent entries are zero.
 */
struct WeilMatrix
{
    ModulePtr module;
    // column index -> (row index -> value)
    std::map<mpz_class, std::map<mpz_class, Cyclotomic>> columns;

    void set(const mpz_class& row, const mpz_class& col, const Cyclotomic& v)
    {
        if (v.is_zero())
            return;
        columns[col][row] = v;
    }

    bool operator==(const WeilMatrix& o) const { return columns == o.columns; }
    bool operator!=(const WeilMatrix& o) const { return !(*this == o); }
};

// closed form of the corrected theorem, both branches
inline WeilMatrix rho_beta_closed(const CtxPtr& ctx, const ModulePtr& disc,
                                  const BetaParams& params)
{
    if (disc->scale() != 1)
        throw ModuleMismatch("rho_beta_closed: expects the scale-1 discriminant module");
    const EvenLattice& lat = *disc->lattice();
    const long d = lat.dim();
    const long p = params.p, l = params.l, s = params.s;
    const long ps = ipow(p, s);
    Cyclotomic norm = Cyclotomic::power_half(ctx, p, Fraction(-s * d, 2));

    WeilMatrix out;
    out.module = disc;
    if (l >= s)
    {
        const auto cosets = enumerate_cosets(lat, ps);
        for (const auto& lam : disc->enumerate())
        {
            Cyclotomic acc(ctx);
            for (const auto& v : cosets)
            {
                FracVec x(d);
                for (long i = 0; i < d; ++i)
                    x[i] = Fraction(v[i]) + lam.coords()[i];
                acc += Cyclotomic::e(ctx, Fraction(-params.h) * lat.q_lift(x) / Fraction(ps));
            }
            ModuleElement row = lam.times(ipow(p, l - s));
            out.set(row.index(), lam.index(), norm * acc);
        }
    }
    else
    {
        const long pl = ipow(p, l);
        const auto cosets = enumerate_cosets(lat, pl);
        for (const auto& lam : disc->enumerate())
        {
            for (const auto& mu : preimages(lam, ipow(p, s - l)))
            {
                Cyclotomic acc(ctx);
                for (const auto& v : cosets)
                {
                    FracVec x(d);
                    for (long i = 0; i < d; ++i)
                        x[i] = Fraction(v[i]) + mu.coords()[i];
                    acc += Cyclotomic::e(
                        ctx, Fraction(-params.h * ipow(p, s - l)) * lat.q_lift(x) / Fraction(pl));
                }
                out.set(mu.index(), lam.index(), norm * acc);
            }
        }
    }
    return out;
}

// oracle: the proof's starting expression, computed verbatim
inline WeilMatrix rho_beta_oracle(const CtxPtr& ctx, const ModulePtr& disc,
                                  const BetaParams& params)
{
    if (disc->scale() != 1)
        throw ModuleMismatch("rho_beta_oracle: expects the scale-1 discriminant module");
    const EvenLattice& lat = *disc->lattice();
    const long p = params.p, l = params.l, s = params.s;
    const long ps = ipow(p, s);
    auto scaled = FqModule::make(disc->lattice(), ps);

    // 1/(sqrt|L| sqrt|L(p^s)|) as sqrt(n)/n
    mpz_class big = disc->order() * scaled->order();
    Cyclotomic pref_norm = Cyclotomic::sqrt_posint(ctx, big) * Fraction(mpz_class(1), big);

    const auto elements = disc->enumerate();
    const Fraction t_frac(params.t);
    const Fraction r_frac(params.r);

    WeilMatrix out;
    out.module = disc;
    for (const auto& lam : elements)
    {
        Cyclotomic pref =
            pref_norm * Cyclotomic::e(ctx, Fraction(params.h) * r_frac * lat.q_lift(lam.coords()));
        // minus r*lambda, as rational coordinates
        FracVec neg_r_lam(lam.coords().size());
        for (size_t i = 0; i < neg_r_lam.size(); ++i)
            neg_r_lam[i] = Fraction(-1) * r_frac * lam.coords()[i];

        // per nu: S(nu) = sum over delta in L(p^s), p^s delta = h lam - p^l nu
        std::vector<Cyclotomic> s_nu;
        s_nu.reserve(elements.size());
        for (const auto& nu : elements)
        {
            ModuleElement target = lam.times(params.h) - nu.times(ipow(p, l));
            ModuleElement target_scaled = scaled->element_from_coords(target.coords());
            Cyclotomic acc(ctx);
            for (const auto& delta : preimages(target_scaled, ps))
            {
                Fraction arg = Fraction(ps) * t_frac * lat.q_lift(delta.coords()) +
                               Fraction(ps) * lat.b_lift(delta.coords(), neg_r_lam);
                acc += Cyclotomic::e(ctx, arg);
            }
            s_nu.push_back(acc);
        }

        for (const auto& rho : elements)
        {
            Cyclotomic entry(ctx);
            FracVec neg_rho(rho.coords().size());
            for (size_t i = 0; i < neg_rho.size(); ++i)
                neg_rho[i] = Fraction(-1) * rho.coords()[i];
            for (size_t ni = 0; ni < elements.size(); ++ni)
            {
                if (s_nu[ni].is_zero())
                    continue;
                const auto& nu = elements[ni];
                Fraction arg = Fraction(-ipow(p, 2 * l - s)) * t_frac * lat.q_lift(nu.coords()) +
                               lat.b_lift(nu.coords(), neg_rho);
                entry += Cyclotomic::e(ctx, arg) * s_nu[ni];
            }
            out.set(rho.index(), lam.index(), pref * entry);
        }
    }
    return out;
}

/**
 * Falsifier for the uncorrected identity: the v-sum is invariant under
 * lambda -> lambda + w while the factored-out phase e(q(lambda)/p^s) is not.
 */
struct FalsifierWitness
{
    FracVec lambda_coords;
    FracVec shifted_coords;
    Cyclotomic vsum_base, vsum_shifted;   // equal for a genuine witness
    Cyclotomic phase_base, phase_shifted; // differ for a genuine witness
    bool falsified = false;
};

inline FalsifierWitness falsify_naive_identity(const CtxPtr& ctx, const ModulePtr& disc, long p,
                                               long s, const ModuleElement& lambda,
                                               const IntVec& w)
{
    const EvenLattice& lat = *disc->lattice();
    const long d = lat.dim();
    const long ps = ipow(p, s);
    FalsifierWitness wit;
    wit.lambda_coords = lambda.coords();
    wit.shifted_coords.resize(d);
    for (long i = 0; i < d; ++i)
        wit.shifted_coords[i] = lambda.coords()[i] + Fraction(w[i]);

    auto vsum = [&](const FracVec& base) {
        Cyclotomic acc(ctx);
        for (const auto& v : enumerate_cosets(lat, ps))
        {
            FracVec x(d);
            for (long i = 0; i < d; ++i)
                x[i] = Fraction(v[i]) + base[i];
            acc += Cyclotomic::e(ctx, lat.q_lift(x) / Fraction(ps));
        }
        return acc;
    };
    wit.vsum_base = vsum(wit.lambda_coords);
    wit.vsum_shifted = vsum(wit.shifted_coords);
    wit.phase_base = Cyclotomic::e(ctx, lat.q_lift(wit.lambda_coords) / Fraction(ps));
    wit.phase_shifted = Cyclotomic::e(ctx, lat.q_lift(wit.shifted_coords) / Fraction(ps));
    wit.falsified = (wit.vsum_base == wit.vsum_shifted) && (wit.phase_base != wit.phase_shifted) &&
                    !wit.vsum_base.is_zero();
    if (!wit.falsified)
        throw WitnessNotFound("falsify_naive_identity: (lambda, w) satisfies the identity; "
                              "try another shift");
    return wit;
}

// true iff every nonzero column sits inside the multiples subgroup p^s * L
inline bool support_check(const WeilMatrix& matrix, const BetaParams& params)
{
    const long ps = ipow(params.p, params.s);
    std::map<mpz_class, bool> in_support;
    for (const auto& el : multiples_subgroup(*matrix.module, ps))
        in_support[el.index()] = true;
    for (const auto& [col, rows] : matrix.columns)
    {
        if (rows.empty())
            continue;
        if (!in_support.count(col))
            return false;
    }
    return true;
}

// per-column support report (column index, nonzero?, in predicted subgroup?)
struct SupportReport
{
    std::vector<std::tuple<mpz_class, bool, bool>> columns;
    bool all_nonzero_in_support = true;
};

inline SupportReport support_report(const WeilMatrix& matrix, const BetaParams& params)
{
    const long ps = ipow(params.p, params.s);
    std::map<mpz_class, bool> in_support;
    for (const auto& el : multiples_subgroup(*matrix.module, ps))
        in_support[el.index()] = true;
    SupportReport rep;
    for (const auto& lam : matrix.module->enumerate())
    {
        auto it = matrix.columns.find(lam.index());
        bool nonzero = it != matrix.columns.end() && !it->second.empty();
        bool in_sub = in_support.count(lam.index()) > 0;
        if (nonzero && !in_sub)
            rep.all_nonzero_in_support = false;
        rep.columns.emplace_back(lam.index(), nonzero, in_sub);
    }
    return rep;
}

} // namespace fqweil
