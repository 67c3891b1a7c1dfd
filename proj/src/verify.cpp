#include "freestein/verify.hpp"

#include <algorithm>
#include <map>

#include "freestein/tracestate.hpp"

namespace freestein {

int IdentityReport::failures() const {
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const SuiteCheck& c) { return !c.pass; }));
}

int IdentityReport::count(const std::string& group) const {
    return static_cast<int>(
        std::count_if(checks.begin(), checks.end(), [&](const SuiteCheck& c) { return c.group == group; }));
}

nlohmann::json IdentityReport::to_json() const {
    // std::map keeps the group order deterministic
    std::map<std::string, std::pair<int, double>> groups;
    nlohmann::json failed = nlohmann::json::array();
    for (const auto& c : checks) {
        auto& g = groups[c.group];
        ++g.first;
        g.second = std::max(g.second, c.defect);
        if (!c.pass) failed.push_back({{"group", c.group}, {"case", c.case_}, {"defect", c.defect}});
    }
    nlohmann::json gs = nlohmann::json::array();
    for (const auto& [name, v] : groups) gs.push_back({{"group", name}, {"checks", v.first}, {"max_defect", v.second}});
    return {{"suite", suite}, {"mode", mode},           {"tol", tol},
            {"checks", checks.size()}, {"failures", failures()}, {"groups", gs},
            {"failed", failed}};
}

AtomicLaw random_atomic_law(std::mt19937_64& rng, int atoms, int L) {
    std::vector<Rational> x, w;
    Rational total = 0;
    for (int i = 0; i < atoms; ++i) {
        x.push_back(Rational(static_cast<int>(rng() % 17) - 8, 4));
        w.push_back(Rational(1 + static_cast<int>(rng() % 5)));
        total += w.back();
    }
    AtomicLaw law;
    for (int p = 1; p <= L; ++p) {
        Rational m = 0;
        for (int i = 0; i < atoms; ++i) {
            Rational xp = 1;
            for (int e = 0; e < p; ++e) xp *= x[i];
            m += w[i] * xp;
        }
        law.moments.push_back(m / total);
    }
    law.cumulants = cumulant_moment_transform(law.moments, MomentCumulant::MomentsToCumulants);
    return law;
}

TensorPoly<Rational> random_x_tensor(std::mt19937_64& rng, int order, int max_deg, int terms) {
    TensorPoly<Rational> t(1, order);
    for (int i = 0; i < terms; ++i) {
        TensorPoly<Rational> e(1, order);
        TensorPoly<Rational>::Key k;
        for (int l = 0; l < order; ++l) k.push_back(Word(rng() % (max_deg + 1), 0));
        e.add_term(k, Rational(1));
        t += e * Rational(static_cast<int>(rng() % 7) - 3);
    }
    return t;
}

namespace {

template <class S>
S from_rational(const Rational& q) {
    if constexpr (std::is_same_v<S, Rational>)
        return q;
    else
        return q.convert_to<double>();
}

template <class S>
std::vector<S> convert(const std::vector<Rational>& v) {
    std::vector<S> r;
    for (const auto& q : v) r.push_back(from_rational<S>(q));
    return r;
}

template <class S>
double defect(const S& a, const S& b) {
    return ScalarTraits<S>::abs(S(a - b));
}

template <class S>
double defect(const NCPoly<S>& a, const NCPoly<S>& b) {
    double d = 0;
    for (const auto& [w, c] : (a - b).terms()) d = std::max(d, ScalarTraits<S>::abs(c));
    return d;
}

template <class S>
double defect(const TensorPoly<S>& a, const TensorPoly<S>& b) {
    double d = 0;
    for (const auto& [k, c] : (a - b).terms()) d = std::max(d, ScalarTraits<S>::abs(c));
    return d;
}

template <class S>
struct Recorder {
    IdentityReport& r;
    double scale_tol;
    template <class A>
    void operator()(const std::string& group, const std::string& c, const A& lhs, const A& rhs) {
        const double d = defect(lhs, rhs);
        const bool ok = ScalarTraits<S>::exact ? d == 0 : d <= scale_tol;
        r.checks.push_back({group, c, d, ok});
    }
};

template <class S>
NCPoly<S> random_poly(std::mt19937_64& rng, int n, int max_deg) {
    NCPoly<S> p(n);
    for (int t = 0; t < 3; ++t) {
        Word w(rng() % (max_deg + 1));
        for (int& l : w) l = static_cast<int>(rng() % n);
        p += NCPoly<S>::monomial(n, w, S(static_cast<int>(rng() % 7) - 3));
    }
    return p;
}

double catalan(int m) {
    double c = 1;
    for (int i = 0; i < m; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
    return c;
}

template <class S>
TensorPoly<S> embed(const TensorPoly<S>& f) {
    TensorPoly<S> r(2, f.order());
    for (const auto& [k, c] : f.terms()) r.add_term(k, c);
    return r;
}

template <class S>
TensorPoly<S> slice(const typename TensorPoly<S>::Key& k, std::size_t a, std::size_t b) {
    TensorPoly<S> t(1, static_cast<int>(b - a));
    t.add_term(typename TensorPoly<S>::Key(k.begin() + a, k.begin() + b), S(1));
    return t;
}

// sum_{i=1}^k (D^{i-1,*} (x) D^{k-i,*})(f)
template <class S>
TensorPoly<S> heisenberg_rhs(const TensorPoly<S>& f, int k, const TraceState<S>& xtr) {
    TensorPoly<S> r(2, 2);
    for (const auto& [key, c] : f.terms())
        for (int i = 1; i <= k; ++i) {
            auto L = wick_divergence(slice<S>(key, 0, i), i - 1, xtr).poly;
            auto R = wick_divergence(slice<S>(key, i, key.size()), k - i, xtr).poly;
            r += TensorPoly<S>::product({L, R}) * c;
        }
    return r;
}

std::string tag(const char* a, int x, const char* b = nullptr, int y = 0) {
    std::string s = std::string(a) + "=" + std::to_string(x);
    if (b) s += std::string(" ") + b + "=" + std::to_string(y);
    return s;
}

}  // namespace

template <class S>
IdentityReport identity_suite(int deg, std::uint64_t seed, double tol) {
    if (deg < 1) throw DomainError("identity_suite: degree must be positive");
    IdentityReport R;
    R.suite = "identities";
    R.mode = ScalarTraits<S>::exact ? "exact" : "float";
    R.tol = ScalarTraits<S>::exact ? 0 : tol;
    Recorder<S> rec{R, R.tol};
    using P = NCPoly<S>;
    using T = TensorPoly<S>;

    const auto S1 = TraceState<S>::standard_semicircular(1);
    for (int n = 0; n <= deg; ++n)
        for (int m = 0; m <= deg; ++m)
            rec("orthonormality", tag("n", n, "m", m), pairing(cheb_u<S>(n), cheb_u<S>(m), S1), S(n == m ? 1 : 0));

    const auto S2 = TraceState<S>::standard_semicircular(1, S(2));
    for (int m = 1; m <= std::max(6, deg / 2); ++m) {
        const S c = S(static_cast<long long>(catalan(m)));
        S two = 1;
        for (int i = 0; i < m; ++i) two *= S(2);
        rec("catalan", tag("m", m), S1(Word(2 * m, 0)), c);
        rec("catalan", tag("m", m, "var", 2), S2(Word(2 * m, 0)), S(c * two));
        rec("catalan", tag("odd", 2 * m - 1), S1(Word(2 * m - 1, 0)), S(0));
    }

    const int top = std::min(deg, 6);
    for (int n = 1; n <= top; ++n)
        for (int d = 0; d <= deg; ++d) {
            const auto p = P::monomial(1, Word(d, 0));
            rec("ladder", tag("n", n, "d", d), pairing(cheb_u<S>(n), p, S1),
                pairing(T::product({cheb_u<S>(n - 1), P::constant(1, S(1))}), diff_quotient(p, 0), S1));
            rec("higher_conjugate", tag("k", n, "d", d), pairing(cheb_u<S>(n), p, S1),
                pairing(T::ones(1, n + 1), diff_iterated(p, std::vector<int>(n, 0)), S1));
        }

    const auto pair = TraceState<S>::standard_semicircular(2);
    rec("schwinger_dyson", tag("d", deg), S(schwinger_dyson_residual(pair, 1.0, deg)), S(0));

    std::mt19937_64 rng(seed);
    const int half = std::max(1, deg / 2);
    for (int rep = 0; rep < 8; ++rep) {
        const auto p = random_poly<S>(rng, 2, half), q = random_poly<S>(rng, 2, half);
        const auto one = P::constant(2, S(1));
        for (int j = 0; j < 2; ++j) {
            rec("leibniz", tag("rep", rep, "j", j), diff_quotient(p * q, j),
                diff_quotient(p, j) * T::product({one, q}) + T::product({p, one}) * diff_quotient(q, j));
            rec("cyclic_gradient", tag("rep", rep, "j", j), cyclic_gradient(p * q)[j],
                flip(diff_quotient(p * q, j)).multiply_out());
            for (int i = 0; i < 2; ++i)
                rec("coassociativity", tag("rep", rep, "ij", 10 * i + j), diff_leg(diff_quotient(p * q, j), 0, i),
                    diff_leg(diff_quotient(p * q, i), 1, j));
        }
    }
    return R;
}

template <class S>
IdentityReport divergence_suite(int kmax, int leg_deg, std::uint64_t seed, int reps, double tol) {
    if (kmax < 0 || leg_deg < 0 || reps < 1) throw DomainError("divergence_suite: invalid sizes");
    IdentityReport R;
    R.suite = "divergence";
    R.mode = ScalarTraits<S>::exact ? "exact" : "float";
    R.tol = ScalarTraits<S>::exact ? 0 : tol;
    Recorder<S> rec{R, R.tol};

    std::mt19937_64 rng(seed);
    const int L = 2 * ((kmax + 2) * leg_deg + kmax + 1) + 2;
    const auto law = random_atomic_law(rng, 3, L);
    const auto xtr = TraceState<S>::moment_table(convert<S>(law.moments));
    const auto mixed = mixed_trace<S>({convert<S>(law.cumulants)}, 1, L);

    for (int k = 0; k <= kmax; ++k)
        for (int rep = 0; rep < reps; ++rep) {
            const auto f = random_x_tensor(rng, k + 1, leg_deg, 2).template cast<S>();
            const auto g = random_x_tensor(rng, k + 1, leg_deg, 2).template cast<S>();
            const auto Df = wick_divergence(f, k, xtr).poly;
            const auto Dg = wick_divergence(g, k, xtr).poly;
            rec("isometry", tag("k", k, "rep", rep), pairing(Df, Dg, mixed), pairing(f, g, xtr));
            if (k < kmax) {
                const auto h = random_x_tensor(rng, k + 2, leg_deg, 2).template cast<S>();
                rec("chaos_orthogonality", tag("k", k, "rep", rep), pairing(Df, wick_divergence(h, k + 1, xtr).poly, mixed),
                    S(0));
            }
            if (k >= 1) {
                rec("heisenberg", tag("k", k, "rep", rep), diff_quotient(Df, 1), heisenberg_rhs(f, k, xtr));
                rec("inversion", tag("k", k, "rep", rep), diff_iterated(Df, std::vector<int>(k, 1)), embed(f));
                rec("centering", tag("k", k, "rep", rep), mixed(Df), S(0));
            }
        }

    const auto sc = TraceState<S>::moment_table({S(0), S(1)});
    const auto s = NCPoly<S>::generator(2, 1);
    for (int k = 2; k <= std::max(kmax, 2) + 2; ++k) {
        const auto Dk = wick_divergence(TensorPoly<S>::ones(1, k + 1), k, sc).poly;
        const auto Dk1 = wick_divergence(TensorPoly<S>::ones(1, k), k - 1, sc).poly;
        const auto Dk2 = wick_divergence(TensorPoly<S>::ones(1, k - 1), k - 2, sc).poly;
        rec("chebyshev_recursion", tag("k", k), Dk, s * Dk1 - Dk2);
    }
    return R;
}

template IdentityReport identity_suite<Rational>(int, std::uint64_t, double);
template IdentityReport identity_suite<double>(int, std::uint64_t, double);
template IdentityReport divergence_suite<Rational>(int, int, std::uint64_t, int, double);
template IdentityReport divergence_suite<double>(int, int, std::uint64_t, int, double);

}  // namespace freestein
