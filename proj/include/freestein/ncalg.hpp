#pragma once

// Noncommutative polynomials in n self-adjoint generators, their tensor powers,
// free difference quotients, cyclic derivatives and higher Jacobians.
//
// Generator indices are 0-based in code (0..n-1); the JSON form is 1-based.

#include <algorithm>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "freestein/errors.hpp"
#include "freestein/scalar.hpp"

namespace freestein {

using Word = std::vector<int>;

inline int degree(const Word& w) { return static_cast<int>(w.size()); }

inline Word concat(const Word& a, const Word& b) {
    Word r;
    r.reserve(a.size() + b.size());
    r.insert(r.end(), a.begin(), a.end());
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

inline Word reversed(Word w) {
    std::reverse(w.begin(), w.end());
    return w;
}

// Words ordered by degree first, then lexicographically.
struct WordLess {
    bool operator()(const Word& a, const Word& b) const {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    }
};

// All words of exact length len over n letters, in WordLess order.
inline std::vector<Word> words_of_length(int n, int len) {
    std::vector<Word> out;
    Word w(len, 0);
    while (true) {
        out.push_back(w);
        int i = len - 1;
        while (i >= 0 && w[i] == n - 1) w[i--] = 0;
        if (i < 0) break;
        ++w[i];
    }
    return out;
}

// All words of length <= max_len.
inline std::vector<Word> words_up_to(int n, int max_len) {
    std::vector<Word> out;
    for (int l = 0; l <= max_len; ++l) {
        auto ws = words_of_length(n, l);
        out.insert(out.end(), ws.begin(), ws.end());
    }
    return out;
}

template <class S>
class NCPoly {
public:
    using Terms = std::map<Word, S, WordLess>;

    explicit NCPoly(int n = 1) : n_(n) {
        if (n < 1) throw DimensionError("NCPoly: generator count must be >= 1");
    }

    static NCPoly constant(int n, const S& c) {
        NCPoly p(n);
        p.add_term({}, c);
        return p;
    }
    static NCPoly monomial(int n, const Word& w, const S& c = S(1)) {
        NCPoly p(n);
        p.add_term(w, c);
        return p;
    }
    static NCPoly generator(int n, int j) { return monomial(n, Word{j}); }

    int n() const { return n_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    int degree() const {
        int d = -1;
        for (const auto& [w, c] : terms_) d = std::max(d, static_cast<int>(w.size()));
        return d;
    }

    S coeff(const Word& w) const {
        auto it = terms_.find(w);
        return it == terms_.end() ? S(0) : it->second;
    }

    void add_term(const Word& w, const S& c) {
        for (int l : w)
            if (l < 0 || l >= n_) throw DimensionError("NCPoly: letter out of range");
        if (c == S(0)) return;
        auto [it, inserted] = terms_.try_emplace(w, c);
        if (!inserted) {
            it->second += c;
            if (it->second == S(0)) terms_.erase(it);
        }
    }

    NCPoly& operator+=(const NCPoly& q) {
        check(q);
        for (const auto& [w, c] : q.terms_) add_term(w, c);
        return *this;
    }
    NCPoly& operator-=(const NCPoly& q) {
        check(q);
        for (const auto& [w, c] : q.terms_) add_term(w, -c);
        return *this;
    }
    NCPoly& operator*=(const S& s) {
        if (s == S(0)) {
            terms_.clear();
            return *this;
        }
        for (auto& [w, c] : terms_) c *= s;
        return *this;
    }

    friend NCPoly operator+(NCPoly a, const NCPoly& b) { return a += b; }
    friend NCPoly operator-(NCPoly a, const NCPoly& b) { return a -= b; }
    friend NCPoly operator-(NCPoly a) { return a *= S(-1); }
    friend NCPoly operator*(NCPoly a, const S& s) { return a *= s; }
    friend NCPoly operator*(const S& s, NCPoly a) { return a *= s; }

    friend NCPoly operator*(const NCPoly& a, const NCPoly& b) {
        a.check(b);
        NCPoly r(a.n_);
        for (const auto& [wa, ca] : a.terms_)
            for (const auto& [wb, cb] : b.terms_) r.add_term(concat(wa, wb), ca * cb);
        return r;
    }

    friend bool operator==(const NCPoly& a, const NCPoly& b) { return a.n_ == b.n_ && a.terms_ == b.terms_; }

    // Involution: reverses words; coefficients are real so conjugation is the identity.
    NCPoly star() const {
        NCPoly r(n_);
        for (const auto& [w, c] : terms_) r.add_term(reversed(w), c);
        return r;
    }

    NCPoly pow(int e) const {
        NCPoly r = constant(n_, S(1));
        for (int i = 0; i < e; ++i) r = r * *this;
        return r;
    }

    template <class T>
    NCPoly<T> cast() const {
        NCPoly<T> r(n_);
        for (const auto& [w, c] : terms_) r.add_term(w, convert<T>(c));
        return r;
    }

    // Relabel generators into a larger alphabet: letter l becomes map[l].
    NCPoly relabel(int new_n, const std::vector<int>& map) const {
        NCPoly r(new_n);
        for (const auto& [w, c] : terms_) {
            Word v;
            v.reserve(w.size());
            for (int l : w) v.push_back(map.at(l));
            r.add_term(v, c);
        }
        return r;
    }

private:
    template <class T>
    static T convert(const S& c) {
        if constexpr (std::is_same_v<T, S>)
            return c;
        else if constexpr (std::is_same_v<T, double>)
            return to_double(c);
        else
            return rational_from_double(to_double(c));
    }

    void check(const NCPoly& q) const {
        if (q.n_ != n_) throw DimensionError("NCPoly: generator count mismatch");
    }

    int n_;
    Terms terms_;
};

using QPoly = NCPoly<Rational>;
using RPoly = NCPoly<double>;

// Element of the m-fold algebraic tensor power; legs are stored left to right.
template <class S>
class TensorPoly {
public:
    using Key = std::vector<Word>;
    struct KeyLess {
        bool operator()(const Key& a, const Key& b) const {
            return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), WordLess{});
        }
    };
    using Terms = std::map<Key, S, KeyLess>;

    TensorPoly(int n = 1, int order = 1) : n_(n), order_(order) {
        if (order < 1) throw DimensionError("TensorPoly: order must be >= 1");
        if (n < 1) throw DimensionError("TensorPoly: generator count must be >= 1");
    }

    // 1^{\otimes m}
    static TensorPoly ones(int n, int order, const S& c = S(1)) {
        TensorPoly t(n, order);
        t.add_term(Key(order), c);
        return t;
    }

    // a_1 (x) ... (x) a_m from polynomial legs.
    static TensorPoly product(const std::vector<NCPoly<S>>& legs) {
        if (legs.empty()) throw DimensionError("TensorPoly::product: no legs");
        const int n = legs[0].n();
        TensorPoly t(n, static_cast<int>(legs.size()));
        t.add_term(Key(legs.size()), S(1));
        for (std::size_t i = 0; i < legs.size(); ++i) {
            if (legs[i].n() != n) throw DimensionError("TensorPoly::product: generator count mismatch");
            TensorPoly r(n, t.order_);
            for (const auto& [k, c] : t.terms_)
                for (const auto& [w, d] : legs[i].terms()) {
                    Key kk = k;
                    kk[i] = w;
                    r.add_term(kk, c * d);
                }
            t = std::move(r);
        }
        return t;
    }

    static TensorPoly from_poly(const NCPoly<S>& p) { return product({p}); }

    int n() const { return n_; }
    int order() const { return order_; }
    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    S coeff(const Key& k) const {
        auto it = terms_.find(k);
        return it == terms_.end() ? S(0) : it->second;
    }

    void add_term(const Key& k, const S& c) {
        if (static_cast<int>(k.size()) != order_) throw DimensionError("TensorPoly: tuple length != order");
        for (const auto& w : k)
            for (int l : w)
                if (l < 0 || l >= n_) throw DimensionError("TensorPoly: letter out of range");
        if (c == S(0)) return;
        auto [it, inserted] = terms_.try_emplace(k, c);
        if (!inserted) {
            it->second += c;
            if (it->second == S(0)) terms_.erase(it);
        }
    }

    TensorPoly& operator+=(const TensorPoly& o) {
        check(o);
        for (const auto& [k, c] : o.terms_) add_term(k, c);
        return *this;
    }
    TensorPoly& operator-=(const TensorPoly& o) {
        check(o);
        for (const auto& [k, c] : o.terms_) add_term(k, -c);
        return *this;
    }
    TensorPoly& operator*=(const S& s) {
        if (s == S(0)) {
            terms_.clear();
            return *this;
        }
        for (auto& [k, c] : terms_) c *= s;
        return *this;
    }
    friend TensorPoly operator+(TensorPoly a, const TensorPoly& b) { return a += b; }
    friend TensorPoly operator-(TensorPoly a, const TensorPoly& b) { return a -= b; }
    friend TensorPoly operator*(TensorPoly a, const S& s) { return a *= s; }
    friend TensorPoly operator*(const S& s, TensorPoly a) { return a *= s; }
    friend bool operator==(const TensorPoly& a, const TensorPoly& b) {
        return a.n_ == b.n_ && a.order_ == b.order_ && a.terms_ == b.terms_;
    }

    // Leg-wise product (a_1 (x) .. )(b_1 (x) ..) = a_1 b_1 (x) ...
    friend TensorPoly operator*(const TensorPoly& a, const TensorPoly& b) {
        a.check(b);
        TensorPoly r(a.n_, a.order_);
        for (const auto& [ka, ca] : a.terms_)
            for (const auto& [kb, cb] : b.terms_) {
                Key k(a.order_);
                for (int i = 0; i < a.order_; ++i) k[i] = concat(ka[i], kb[i]);
                r.add_term(k, ca * cb);
            }
        return r;
    }

    // Order-1 tensor back to a polynomial.
    NCPoly<S> to_poly() const {
        if (order_ != 1) throw DimensionError("TensorPoly::to_poly: order != 1");
        NCPoly<S> p(n_);
        for (const auto& [k, c] : terms_) p.add_term(k[0], c);
        return p;
    }

    // Multiply all legs into one polynomial: a_1 a_2 ... a_m.
    NCPoly<S> multiply_out() const {
        NCPoly<S> p(n_);
        for (const auto& [k, c] : terms_) {
            Word w;
            for (const auto& l : k) w.insert(w.end(), l.begin(), l.end());
            p.add_term(w, c);
        }
        return p;
    }

    // Per-leg involution a_1* (x) ... (x) a_m*.
    TensorPoly star() const {
        TensorPoly r(n_, order_);
        for (const auto& [k, c] : terms_) {
            Key kk;
            for (const auto& w : k) kk.push_back(reversed(w));
            r.add_term(kk, c);
        }
        return r;
    }

    // Largest total degree over all terms (-1 for zero).
    int total_degree() const {
        int d = -1;
        for (const auto& [k, c] : terms_) {
            int s = 0;
            for (const auto& w : k) s += static_cast<int>(w.size());
            d = std::max(d, s);
        }
        return d;
    }

    template <class T>
    TensorPoly<T> cast() const {
        TensorPoly<T> r(n_, order_);
        for (const auto& [k, c] : terms_) {
            if constexpr (std::is_same_v<T, S>)
                r.add_term(k, c);
            else if constexpr (std::is_same_v<T, double>)
                r.add_term(k, to_double(c));
            else
                r.add_term(k, rational_from_double(to_double(c)));
        }
        return r;
    }

private:
    void check(const TensorPoly& o) const {
        if (o.n_ != n_ || o.order_ != order_) throw DimensionError("TensorPoly: shape mismatch");
    }

    int n_;
    int order_;
    Terms terms_;
};

// Map from multi-index (j, i_1..i_k) to order-(k+1) tensors; missing entries are zero.
template <class S>
class TensorArray {
public:
    using Index = std::vector<int>;

    TensorArray(int n = 1, int k = 1) : n_(n), k_(k) {
        if (k < 0) throw DimensionError("TensorArray: negative order");
    }

    int n() const { return n_; }
    int k() const { return k_; }
    const std::map<Index, TensorPoly<S>>& entries() const { return entries_; }

    TensorPoly<S> at(const Index& idx) const {
        check_index(idx);
        auto it = entries_.find(idx);
        return it == entries_.end() ? TensorPoly<S>(n_, k_ + 1) : it->second;
    }

    void set(const Index& idx, TensorPoly<S> t) {
        check_index(idx);
        if (t.order() != k_ + 1 || t.n() != n_) throw DimensionError("TensorArray: entry shape mismatch");
        if (t.is_zero())
            entries_.erase(idx);
        else
            entries_[idx] = std::move(t);
    }

    void add(const Index& idx, const TensorPoly<S>& t) { set(idx, at(idx) + t); }

    bool is_zero() const { return entries_.empty(); }

    friend bool operator==(const TensorArray& a, const TensorArray& b) {
        return a.n_ == b.n_ && a.k_ == b.k_ && a.entries_ == b.entries_;
    }

private:
    void check_index(const Index& idx) const {
        if (static_cast<int>(idx.size()) != k_ + 1) throw DimensionError("TensorArray: index length != k+1");
        for (int i : idx)
            if (i < 0 || i >= n_) throw DimensionError("TensorArray: index out of range");
    }

    int n_;
    int k_;
    std::map<Index, TensorPoly<S>> entries_;
};

// ---------------------------------------------------------------------------
// Operations

// sum_m |c_m| R^{deg m}
template <class S>
double norm_R(const NCPoly<S>& p, double R) {
    if (!(R > 0)) throw DomainError("norm_R: R must be positive");
    double s = 0;
    for (const auto& [w, c] : p.terms()) s += ScalarTraits<S>::abs(c) * std::pow(R, static_cast<double>(w.size()));
    return s;
}

// Replace leg `leg` of every term by its splittings at letter j:
// ... (x) a t_j b (x) ...  ->  ... (x) a (x) b (x) ...
template <class S>
TensorPoly<S> diff_leg(const TensorPoly<S>& T, int leg, int j) {
    if (leg < 0 || leg >= T.order()) throw DimensionError("diff_leg: leg out of range");
    if (j < 0 || j >= T.n()) throw DimensionError("diff_leg: generator index out of range");
    TensorPoly<S> r(T.n(), T.order() + 1);
    for (const auto& [key, c] : T.terms()) {
        const Word& w = key[leg];
        for (std::size_t pos = 0; pos < w.size(); ++pos) {
            if (w[pos] != j) continue;
            typename TensorPoly<S>::Key k;
            k.reserve(key.size() + 1);
            k.insert(k.end(), key.begin(), key.begin() + leg);
            k.emplace_back(w.begin(), w.begin() + pos);
            k.emplace_back(w.begin() + pos + 1, w.end());
            k.insert(k.end(), key.begin() + leg + 1, key.end());
            r.add_term(k, c);
        }
    }
    return r;
}

// Free difference quotient: sum over m = a t_j b of a (x) b.
template <class S>
TensorPoly<S> diff_quotient(const NCPoly<S>& p, int j) {
    if (j < 0 || j >= p.n()) throw DimensionError("diff_quotient: generator index out of range");
    return diff_leg(TensorPoly<S>::from_poly(p), 0, j);
}

// Iterated quotient (d_{i_1} (x) id) o ... o (d_{i_{k-1}} (x) id) o d_{i_k}.
template <class S>
TensorPoly<S> diff_iterated(const NCPoly<S>& p, const std::vector<int>& idx) {
    if (idx.empty()) return TensorPoly<S>::from_poly(p);
    TensorPoly<S> t = diff_quotient(p, idx.back());
    for (int r = static_cast<int>(idx.size()) - 2; r >= 0; --r) t = diff_leg(t, 0, idx[r]);
    return t;
}

// Cyclic derivative: sum over m = a t_j b of b a.
template <class S>
std::vector<NCPoly<S>> cyclic_gradient(const NCPoly<S>& p) {
    std::vector<NCPoly<S>> out(p.n(), NCPoly<S>(p.n()));
    for (const auto& [w, c] : p.terms())
        for (std::size_t pos = 0; pos < w.size(); ++pos) {
            Word v(w.begin() + pos + 1, w.end());
            v.insert(v.end(), w.begin(), w.begin() + pos);
            out[w[pos]].add_term(v, c);
        }
    return out;
}

// Entry (j, i_1..i_k) holds the iterated quotient of P_j along (i_1..i_k).
template <class S>
TensorArray<S> jacobian_k(const std::vector<NCPoly<S>>& P, int k) {
    if (P.empty()) throw DimensionError("jacobian_k: empty polynomial vector");
    if (k < 1) throw DimensionError("jacobian_k: order must be >= 1");
    const int n = P[0].n();
    for (const auto& p : P)
        if (p.n() != n) throw DimensionError("jacobian_k: generator count mismatch");
    if (static_cast<int>(P.size()) > n) throw DimensionError("jacobian_k: more components than generators");
    TensorArray<S> J(n, k);
    for (std::size_t j = 0; j < P.size(); ++j) {
        std::vector<int> idx(k, 0);
        while (true) {
            TensorPoly<S> t = diff_iterated(P[j], idx);
            std::vector<int> full{static_cast<int>(j)};
            full.insert(full.end(), idx.begin(), idx.end());
            J.set(full, std::move(t));
            int r = k - 1;
            while (r >= 0 && idx[r] == n - 1) idx[r--] = 0;
            if (r < 0) break;
            ++idx[r];
        }
    }
    return J;
}

// x (x) y -> y (x) x
template <class S>
TensorPoly<S> flip(const TensorPoly<S>& T) {
    if (T.order() != 2) throw DimensionError("flip: order must be 2");
    TensorPoly<S> r(T.n(), 2);
    for (const auto& [k, c] : T.terms()) r.add_term({k[1], k[0]}, c);
    return r;
}

// Generic elementwise permutation of legs: result leg i is input leg perm[i].
template <class S>
TensorPoly<S> permute_legs(const TensorPoly<S>& T, const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != T.order()) throw DimensionError("permute_legs: bad permutation");
    TensorPoly<S> r(T.n(), T.order());
    for (const auto& [k, c] : T.terms()) {
        typename TensorPoly<S>::Key kk(k.size());
        for (std::size_t i = 0; i < perm.size(); ++i) kk[i] = k[perm[i]];
        r.add_term(kk, c);
    }
    return r;
}

}  // namespace freestein
