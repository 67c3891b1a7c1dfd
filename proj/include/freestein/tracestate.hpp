#pragma once

// Tracial states on noncommutative polynomials: semicircular families (Wick
// formula), free families given by free cumulants, and 1D moment tables.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <vector>

#include "freestein/ncalg.hpp"

namespace freestein {

struct WordHash {
    std::size_t operator()(const Word& w) const noexcept {
        std::size_t h = w.size();
        for (int l : w) h = h * 1000003u ^ static_cast<std::size_t>(l + 1);
        return h;
    }
};

enum class MomentCumulant { MomentsToCumulants, CumulantsToMoments };

// 1D moment-cumulant relations over non-crossing partitions, via the
// first-block recursion m_n = sum_s kappa_s [z^{n-s}] M(z)^s.
// Index 0 of input and output holds order 1.
template <class S>
std::vector<S> cumulant_moment_transform(const std::vector<S>& seq, MomentCumulant dir) {
    const int N = static_cast<int>(seq.size());
    std::vector<S> m(N + 1, S(0)), k(N + 1, S(0));
    m[0] = S(1);
    if (dir == MomentCumulant::MomentsToCumulants)
        for (int i = 1; i <= N; ++i) m[i] = seq[i - 1];
    else
        for (int i = 1; i <= N; ++i) k[i] = seq[i - 1];
    // pw[s][j] = [z^j] M(z)^s, built lazily as moments become known.
    for (int n = 1; n <= N; ++n) {
        // Powers of the moment series truncated at degree n-1 use m_0..m_{n-1} only.
        std::vector<std::vector<S>> pw(n + 1, std::vector<S>(n, S(0)));
        pw[0][0] = S(1);
        for (int s = 1; s <= n; ++s)
            for (int a = 0; a < n; ++a) {
                if (pw[s - 1][a] == S(0)) continue;
                for (int b = 0; a + b < n; ++b) pw[s][a + b] += pw[s - 1][a] * m[b];
            }
        S rest(0);
        for (int s = 1; s < n; ++s) rest += k[s] * pw[s][n - s];
        if (dir == MomentCumulant::MomentsToCumulants)
            k[n] = m[n] - rest;
        else
            m[n] = rest + k[n];
    }
    const auto& out = dir == MomentCumulant::MomentsToCumulants ? k : m;
    return std::vector<S>(out.begin() + 1, out.end());
}

// Free cumulants of S(0, var), length M.
template <class S>
std::vector<S> semicircular_cumulants(const S& var, int M) {
    std::vector<S> k(M, S(0));
    if (M >= 2) k[1] = var;
    return k;
}

// Smallest eigenvalue of the Hankel matrix [m_{i+j}]_{i,j<=d}, m_0 = 1.
template <class S>
double hankel_min_eigenvalue(const std::vector<S>& moments, double* scale = nullptr) {
    const int d = static_cast<int>(moments.size()) / 2;
    Eigen::MatrixXd H(d + 1, d + 1);
    for (int i = 0; i <= d; ++i)
        for (int j = 0; j <= d; ++j) H(i, j) = i + j == 0 ? 1.0 : to_double(moments[i + j - 1]);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (scale) *scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    return es.eigenvalues().minCoeff();
}

template <class S>
class TraceState {
public:
    enum class Kind { SemicircularFamily, FreeFamily, MomentTable1D };
    using Matrix = std::vector<std::vector<S>>;

    // Covariance must be symmetric positive semidefinite.
    static TraceState semicircular(const Matrix& cov) {
        const int n = static_cast<int>(cov.size());
        if (n < 1) throw DimensionError("semicircular: empty covariance");
        Eigen::MatrixXd C(n, n);
        for (int i = 0; i < n; ++i) {
            if (static_cast<int>(cov[i].size()) != n) throw DimensionError("semicircular: covariance not square");
            for (int j = 0; j < n; ++j) C(i, j) = to_double(cov[i][j]);
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (cov[i][j] != cov[j][i]) throw DomainError("semicircular: covariance not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
            throw DomainError("semicircular: covariance not positive semidefinite");
        TraceState t(Kind::SemicircularFamily, n);
        t.cov_ = cov;
        for (int i = 0; i < n; ++i) t.norm_bound_.push_back(2.0 * std::sqrt(std::max(0.0, C(i, i))));
        return t;
    }

    // n free standard semicirculars scaled to variance var.
    static TraceState standard_semicircular(int n, const S& var = S(1)) {
        Matrix c(n, std::vector<S>(n, S(0)));
        for (int i = 0; i < n; ++i) c[i][i] = var;
        return semicircular(c);
    }

    // Mutually free generators with the given free cumulant sequences (index 0 = kappa_1).
    static TraceState free_family(const std::vector<std::vector<S>>& cumulants) {
        const int n = static_cast<int>(cumulants.size());
        if (n < 1) throw DimensionError("free_family: no generators");
        TraceState t(Kind::FreeFamily, n);
        t.cum_ = cumulants;
        for (const auto& k : cumulants) {
            auto m = cumulant_moment_transform(k, MomentCumulant::CumulantsToMoments);
            check_hankel(m, "free_family");
            t.norm_bound_.push_back(default_norm_bound(m));
        }
        return t;
    }

    // 1D law given by raw moments m_1..m_L.
    static TraceState moment_table(const std::vector<S>& moments, double norm_bound = -1) {
        TraceState t(Kind::MomentTable1D, 1);
        check_hankel(moments, "moment_table");
        t.moments_ = moments;
        t.norm_bound_.push_back(norm_bound > 0 ? norm_bound : default_norm_bound(moments));
        return t;
    }

    Kind kind() const { return kind_; }
    int n() const { return n_; }

    // Longest word that can be evaluated.
    int max_degree() const {
        switch (kind_) {
            case Kind::SemicircularFamily: return std::numeric_limits<int>::max();
            case Kind::FreeFamily: {
                std::size_t m = std::numeric_limits<std::size_t>::max();
                for (const auto& k : cum_) m = std::min(m, k.size());
                return static_cast<int>(m);
            }
            case Kind::MomentTable1D: return static_cast<int>(moments_.size());
        }
        return 0;
    }

    // Operator-norm estimate for generator j (see README for the default rule).
    double norm_bound(int j) const { return norm_bound_.at(j); }
    void set_norm_bound(int j, double b) { norm_bound_.at(j) = b; }

    const Matrix& covariance() const { return cov_; }
    const std::vector<std::vector<S>>& cumulants() const { return cum_; }

    // Moments m_1..m_L of generator j (L = max_degree, capped at `cap` for semicirculars).
    std::vector<S> moments(int j, int cap) const {
        std::vector<S> m;
        const int L = std::min(cap, max_degree());
        for (int i = 1; i <= L; ++i) m.push_back((*this)(Word(i, j)));
        return m;
    }

    // tau(w)
    S operator()(const Word& w) const {
        for (int l : w)
            if (l < 0 || l >= n_) throw DimensionError("trace: letter out of range");
        return eval(w);
    }

    S operator()(const NCPoly<S>& p) const {
        if (p.n() != n_) throw DimensionError("trace: generator count mismatch");
        S s(0);
        for (const auto& [w, c] : p.terms()) s += c * eval(w);
        return s;
    }

    // tau^{(x) m} applied leg-wise.
    S operator()(const TensorPoly<S>& T) const {
        if (T.n() != n_) throw DimensionError("trace: generator count mismatch");
        S s(0);
        for (const auto& [k, c] : T.terms()) {
            S prod = c;
            for (const auto& w : k) {
                if (prod == S(0)) break;
                prod *= eval(w);
            }
            s += prod;
        }
        return s;
    }

    // (id^{leg} (x) tau (x) id) -- traces out one leg, lowering the order by one.
    TensorPoly<S> trace_leg(const TensorPoly<S>& T, int leg) const {
        if (T.order() < 2) throw DimensionError("trace_leg: order must be >= 2");
        TensorPoly<S> r(T.n(), T.order() - 1);
        for (const auto& [k, c] : T.terms()) {
            S v = eval(k[leg]);
            if (v == S(0)) continue;
            typename TensorPoly<S>::Key kk;
            for (int i = 0; i < T.order(); ++i)
                if (i != leg) kk.push_back(k[i]);
            r.add_term(kk, c * v);
        }
        return r;
    }

private:
    TraceState(Kind k, int n) : kind_(k), n_(n), cache_(std::make_shared<Cache>()) {}

    static double default_norm_bound(const std::vector<S>& m) {
        const int d = static_cast<int>(m.size()) / 2;
        if (d == 0) return 1.0;
        const double m2d = to_double(m[2 * d - 1]);
        return std::max(1.0, std::pow(std::max(0.0, m2d), 1.0 / (2.0 * d)));
    }

    static void check_hankel(const std::vector<S>& m, const char* who) {
        if (m.size() < 2) return;
        double scale = 1;
        double lo = hankel_min_eigenvalue(m, &scale);
        if (lo < -1e-10 * scale)
            throw DomainError(std::string(who) + ": Hankel moment matrix is not positive semidefinite (min eigenvalue " +
                              std::to_string(lo) + ")");
    }

    struct Cache {
        std::mutex mu;
        std::unordered_map<Word, S, WordHash> memo;
    };

    S eval(const Word& w) const {
        if (w.empty()) return S(1);
        {
            std::lock_guard<std::mutex> lk(cache_->mu);
            auto it = cache_->memo.find(w);
            if (it != cache_->memo.end()) return it->second;
        }
        S v = compute(w);
        std::lock_guard<std::mutex> lk(cache_->mu);
        cache_->memo.emplace(w, v);
        return v;
    }

    S sub(const Word& w, std::size_t a, std::size_t b) const { return eval(Word(w.begin() + a, w.begin() + b)); }

    S compute(const Word& w) const {
        const std::size_t L = w.size();
        switch (kind_) {
            case Kind::MomentTable1D:
                if (L > moments_.size())
                    throw TruncationError("trace: moment table too short for word of degree " + std::to_string(L));
                return moments_[L - 1];
            case Kind::SemicircularFamily: {
                if (L % 2) return S(0);
                // Pair position 0 with position j; inside and outside are independent.
                S s(0);
                for (std::size_t j = 1; j < L; j += 2) {
                    const S& c = cov_[w[0]][w[j]];
                    if (c == S(0)) continue;
                    S in = sub(w, 1, j);
                    if (in == S(0)) continue;
                    s += c * in * sub(w, j + 1, L);
                }
                return s;
            }
            case Kind::FreeFamily: {
                const int col = w[0];
                const auto& kap = cum_[col];
                // V[p][r]: block containing 0 has r elements, last one at p.
                std::vector<std::vector<S>> V(L, std::vector<S>(L + 1, S(0)));
                V[0][1] = S(1);
                S s(0);
                for (std::size_t p = 0; p < L; ++p) {
                    if (w[p] != col) continue;
                    for (std::size_t r = 1; r <= p + 1; ++r) {
                        if (V[p][r] == S(0)) continue;
                        if (r > kap.size())
                            throw TruncationError("trace: cumulant sequence too short for block of size " +
                                                  std::to_string(r));
                        if (kap[r - 1] != S(0)) {
                            S tail = sub(w, p + 1, L);
                            if (tail != S(0)) s += V[p][r] * kap[r - 1] * tail;
                        }
                        for (std::size_t q = p + 1; q < L; ++q) {
                            if (w[q] != col) continue;
                            S gap = sub(w, p + 1, q);
                            if (gap != S(0)) V[q][r + 1] += V[p][r] * gap;
                        }
                    }
                }
                return s;
            }
        }
        return S(0);
    }

    Kind kind_;
    int n_;
    Matrix cov_;
    std::vector<std::vector<S>> cum_;
    std::vector<S> moments_;
    std::vector<double> norm_bound_;
    std::shared_ptr<Cache> cache_;
};

// Convenience wrappers mirroring the operation names.
template <class S>
S semicircular_trace(const Word& w, const typename TraceState<S>::Matrix& cov) {
    return TraceState<S>::semicircular(cov)(w);
}

template <class S>
S free_family_trace(const Word& w, const std::vector<std::vector<S>>& family) {
    return TraceState<S>::free_family(family)(w);
}

// <a, b> = tau(a b*) for polynomials.
template <class S>
S pairing(const NCPoly<S>& a, const NCPoly<S>& b, const TraceState<S>& tr) {
    return tr(a * b.star());
}

// Leg-wise <a_1(x)..(x)a_m, b_1(x)..(x)b_m> = prod_i tau(a_i b_i*).
template <class S>
S pairing(const TensorPoly<S>& A, const TensorPoly<S>& B, const TraceState<S>& tr) {
    if (A.order() != B.order() || A.n() != B.n()) throw DimensionError("pairing: tensor shape mismatch");
    S s(0);
    for (const auto& [ka, ca] : A.terms())
        for (const auto& [kb, cb] : B.terms()) {
            S prod = ca * cb;
            for (int i = 0; i < A.order() && prod != S(0); ++i) prod *= tr(concat(ka[i], reversed(kb[i])));
            s += prod;
        }
    return s;
}

template <class S>
S pairing(const TensorArray<S>& A, const TensorArray<S>& B, const TraceState<S>& tr) {
    if (A.n() != B.n() || A.k() != B.k()) throw DimensionError("pairing: array shape mismatch");
    S s(0);
    for (const auto& [idx, t] : A.entries()) {
        auto it = B.entries().find(idx);
        if (it != B.entries().end()) s += pairing(t, it->second, tr);
    }
    return s;
}

// Max over j and monomials P (deg <= d) of |rho tau(P* x_j) - (tau(x)tau)(d_j P)|.
template <class S>
double schwinger_dyson_residual(const TraceState<S>& tr, double rho, int d) {
    if (!(rho > 0)) throw DomainError("schwinger_dyson_residual: rho must be positive");
    const int n = tr.n();
    double worst = 0;
    for (const Word& w : words_up_to(n, d))
        for (int j = 0; j < n; ++j) {
            auto P = NCPoly<S>::monomial(n, w);
            double lhs = rho * to_double(tr(concat(reversed(w), Word{j})));
            double rhs = to_double(tr(diff_quotient(P, j)));
            worst = std::max(worst, std::fabs(lhs - rhs));
        }
    return worst;
}

// ||J^k P|| under the state.
template <class S>
double sobolev_seminorm(const std::vector<NCPoly<S>>& P, int k, const TraceState<S>& tr) {
    auto J = jacobian_k(P, k);
    return std::sqrt(std::max(0.0, to_double(pairing(J, J, tr))));
}

}  // namespace freestein
