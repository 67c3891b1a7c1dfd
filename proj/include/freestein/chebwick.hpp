#pragma once

// Chebyshev polynomials of the second kind and the Wick divergence calculus
// for a semicircular family S free from an x-family.

#include <vector>

#include "freestein/ncalg.hpp"
#include "freestein/tracestate.hpp"

namespace freestein {

// Polynomial over the union alphabet: letters 0..nx-1 are x-generators,
// letters nx..nx+ns-1 are semicircular s-generators.
template <class S>
struct MixedPoly {
    NCPoly<S> poly;
    int nx = 0;
    int ns = 1;

    int s_letter(int i) const { return nx + i; }
};

// State on the union alphabet: x-family given by cumulants, free from ns
// standard semicirculars. Cumulant sequences are truncated at length M.
template <class S>
TraceState<S> mixed_trace(const std::vector<std::vector<S>>& x_cumulants, int ns, int M) {
    std::vector<std::vector<S>> fam = x_cumulants;
    for (int i = 0; i < ns; ++i) fam.push_back(semicircular_cumulants<S>(S(1), M));
    return TraceState<S>::free_family(fam);
}

// U_0 = 1, U_1 = t, t U_n = U_{n+1} + U_{n-1}.
template <class S>
NCPoly<S> cheb_u(int k) {
    if (k < 0) throw DomainError("cheb_u: negative order");
    const auto t = NCPoly<S>::generator(1, 0);
    NCPoly<S> prev = NCPoly<S>::constant(1, S(1));
    if (k == 0) return prev;
    NCPoly<S> cur = t;
    for (int i = 1; i < k; ++i) {
        NCPoly<S> next = t * cur - prev;
        prev = std::move(cur);
        cur = std::move(next);
    }
    return cur;
}

namespace detail {

template <class S>
NCPoly<S> wick_rec(const std::vector<Word>& legs, std::size_t from, int nx, const TraceState<S>& xtr, int s_letter) {
    const int n = nx + 1;
    const std::size_t m = legs.size() - from;  // number of remaining legs = order + 1
    if (m == 1) return NCPoly<S>::monomial(n, legs[from]);
    // a_1 S rec(a_2 ...)
    NCPoly<S> head = NCPoly<S>::monomial(n, concat(legs[from], Word{s_letter}));
    NCPoly<S> r = head * wick_rec(legs, from + 1, nx, xtr, s_letter);
    if (m >= 3) {
        S t2 = xtr(legs[from + 1]);
        if (t2 != S(0)) {
            NCPoly<S> a1 = NCPoly<S>::monomial(n, legs[from]);
            r -= (a1 * wick_rec(legs, from + 2, nx, xtr, s_letter)) * t2;
        }
    }
    return r;
}

}  // namespace detail

// Divergence of order k on tensors whose legs only involve x-generators.
// Recursion: a_1 (x)..(x) a_{k+1} -> a_1 S D^{k-1}(a_2..) - tau(a_2) a_1 D^{k-2}(a_3..).
template <class S>
MixedPoly<S> wick_divergence(const TensorPoly<S>& f, int k, const TraceState<S>& xtr) {
    if (f.order() != k + 1) throw DimensionError("wick_divergence: tensor order must be k+1");
    if (f.n() != xtr.n()) throw DimensionError("wick_divergence: x-trace generator count mismatch");
    const int nx = f.n();
    MixedPoly<S> out{NCPoly<S>(nx + 1), nx, 1};
    for (const auto& [key, c] : f.terms()) out.poly += detail::wick_rec(key, 0, nx, xtr, nx) * c;
    return out;
}

// Same, for a tensor already written over the mixed alphabet; rejects S-letters in legs.
template <class S>
MixedPoly<S> wick_divergence_mixed(const TensorPoly<S>& f, int k, int nx, const TraceState<S>& xtr) {
    if (f.order() != k + 1) throw DimensionError("wick_divergence: tensor order must be k+1");
    TensorPoly<S> fx(nx, f.order());
    for (const auto& [key, c] : f.terms()) {
        for (const auto& w : key)
            for (int l : w)
                if (l >= nx) throw PreconditionError("wick_divergence: S-letter inside a leg; use general_adjoint");
        fx.add_term(key, c);
    }
    return wick_divergence(fx, k, xtr);
}

// Adjoint of the difference quotient in the semicircular letter `s_letter`:
//   P (x) Q -> P s Q - (id(x)tau)(d_s P) Q - P (tau(x)id)(d_s Q),
// with tau the mixed (free product) state.
template <class S>
NCPoly<S> general_adjoint(const TensorPoly<S>& T, int s_letter, const TraceState<S>& mixed) {
    if (T.order() != 2) throw DimensionError("general_adjoint: order must be 2");
    if (T.n() != mixed.n()) throw DimensionError("general_adjoint: generator count mismatch");
    const int n = T.n();
    NCPoly<S> r(n);
    for (const auto& [key, c] : T.terms()) {
        const Word& P = key[0];
        const Word& Q = key[1];
        r.add_term(concat(concat(P, Word{s_letter}), Q), c);
        // (id (x) tau)(d_s P) . Q : split P = u s v, keep u tau(v)
        for (std::size_t pos = 0; pos < P.size(); ++pos) {
            if (P[pos] != s_letter) continue;
            S tv = mixed(Word(P.begin() + pos + 1, P.end()));
            if (tv != S(0)) r.add_term(concat(Word(P.begin(), P.begin() + pos), Q), -c * tv);
        }
        // P . (tau (x) id)(d_s Q) : split Q = u s v, keep tau(u) v
        for (std::size_t pos = 0; pos < Q.size(); ++pos) {
            if (Q[pos] != s_letter) continue;
            S tu = mixed(Word(Q.begin(), Q.begin() + pos));
            if (tu != S(0)) r.add_term(concat(P, Word(Q.begin() + pos + 1, Q.end())), -c * tu);
        }
    }
    return r;
}

// Apply the adjoint to legs (leg, leg+1) of an order-m tensor, giving order m-1.
template <class S>
TensorPoly<S> adjoint_on_legs(const TensorPoly<S>& T, int leg, int s_letter, const TraceState<S>& mixed) {
    if (T.order() < 2 || leg < 0 || leg + 1 >= T.order()) throw DimensionError("adjoint_on_legs: bad leg");
    TensorPoly<S> r(T.n(), T.order() - 1);
    for (const auto& [key, c] : T.terms()) {
        TensorPoly<S> pair(T.n(), 2);
        pair.add_term({key[leg], key[leg + 1]}, S(1));
        NCPoly<S> merged = general_adjoint(pair, s_letter, mixed);
        for (const auto& [w, d] : merged.terms()) {
            typename TensorPoly<S>::Key kk(key.begin(), key.begin() + leg);
            kk.push_back(w);
            kk.insert(kk.end(), key.begin() + leg + 2, key.end());
            r.add_term(kk, c * d);
        }
    }
    return r;
}

// Divergence of order k built from composed first-order adjoints:
// d*_{i_1} o (id (x) d*_{i_2}) o ... o (id^{k-1} (x) d*_{i_k}).  Letters are absolute.
template <class S>
NCPoly<S> composed_divergence(const TensorPoly<S>& f, const std::vector<int>& s_letters, const TraceState<S>& mixed) {
    const int k = static_cast<int>(s_letters.size());
    if (f.order() != k + 1) throw DimensionError("composed_divergence: tensor order must be k+1");
    if (k == 0) return f.to_poly();
    TensorPoly<S> t = f;
    for (int r = k - 1; r >= 0; --r) t = adjoint_on_legs(t, r, s_letters[r], mixed);
    return t.to_poly();
}

// Multivariate Chebyshev polynomial in ns semicirculars (indices 0-based).
template <class S>
NCPoly<S> multivariate_cheb(int k, const std::vector<int>& indices, int ns) {
    if (static_cast<int>(indices.size()) != k) throw DimensionError("multivariate_cheb: need k indices");
    for (int i : indices)
        if (i < 0 || i >= ns) throw DimensionError("multivariate_cheb: index out of range");
    if (k == 0) return NCPoly<S>::constant(ns, S(1));
    auto tr = TraceState<S>::standard_semicircular(ns);
    return composed_divergence(TensorPoly<S>::ones(ns, k + 1), indices, tr);
}

}  // namespace freestein
