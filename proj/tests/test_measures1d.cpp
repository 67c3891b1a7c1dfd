#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "freestein/errors.hpp"
#include "freestein/measures1d.hpp"
#include "freestein/steinsolve.hpp"

using namespace freestein;

namespace {

constexpr double pi = std::numbers::pi;

double catalan(int n) {
    double c = 1;
    for (int i = 0; i < n; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
    return c;
}

// Closed-form CDF of S(c, r^2).
double semicircle_cdf(double x, double c, double r) {
    const double y = (x - c) / r;
    if (y <= -2) return 0;
    if (y >= 2) return 1;
    return 0.5 + y * std::sqrt(4 - y * y) / (4 * pi) + std::asin(y / 2) / pi;
}

// Bisection quantile of a semicircle mixture, independent of GridMeasure.
double mixture_quantile(double p, const std::vector<double>& w, const std::vector<double>& c,
                        const std::vector<double>& v) {
    double lo = 1e9, hi = -1e9;
    for (std::size_t i = 0; i < c.size(); ++i) {
        lo = std::min(lo, c[i] - 2 * std::sqrt(v[i]));
        hi = std::max(hi, c[i] + 2 * std::sqrt(v[i]));
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        double F = 0;
        for (std::size_t i = 0; i < c.size(); ++i) F += w[i] * semicircle_cdf(mid, c[i], std::sqrt(v[i]));
        (F < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// W2 between a semicircle mixture and S(0,1) by midpoint rule on the quantile coupling.
double mixture_w2_oracle(const std::vector<double>& w, const std::vector<double>& c, const std::vector<double>& v) {
    const int n = 80000;
    double s = 0;
    for (int i = 0; i < n; ++i) {
        const double p = (i + 0.5) / n;
        const double d = mixture_quantile(p, w, c, v) - mixture_quantile(p, {1.0}, {0.0}, {1.0});
        s += d * d / n;
    }
    return std::sqrt(s);
}

// Free cumulants from moments m_1..m_L via m_n = sum_s kappa_s sum_{i_1+..+i_s = n-s} m_{i_1}..m_{i_s}.
std::vector<double> free_cumulants(const std::vector<double>& m1) {
    const int L = static_cast<int>(m1.size());
    std::vector<double> m(L + 1, 0), k(L + 1, 0);
    m[0] = 1;
    for (int i = 1; i <= L; ++i) m[i] = m1[i - 1];
    // P[s][r]: sum over compositions of r into s nonnegative parts of products of moments.
    std::vector<std::vector<double>> P(L + 1, std::vector<double>(L + 1, 0));
    P[0][0] = 1;
    for (int s = 1; s <= L; ++s)
        for (int r = 0; r <= L; ++r)
            for (int i = 0; i <= r; ++i) P[s][r] += m[i] * P[s - 1][r - i];
    for (int n = 1; n <= L; ++n) {
        double rest = 0;
        for (int s = 1; s < n; ++s) rest += k[s] * P[s][n - s];
        k[n] = m[n] - rest;  // P[n][0] = 1
    }
    return {k.begin() + 1, k.end()};
}

std::vector<double> moments_from_cumulants(const std::vector<double>& k1) {
    const int L = static_cast<int>(k1.size());
    std::vector<double> m(L + 1, 0);
    m[0] = 1;
    for (int n = 1; n <= L; ++n) {
        std::vector<std::vector<double>> P(n + 1, std::vector<double>(n + 1, 0));
        P[0][0] = 1;
        for (int s = 1; s <= n; ++s)
            for (int r = 0; r <= n - s; ++r)
                for (int i = 0; i <= r; ++i) P[s][r] += m[i] * P[s - 1][r - i];
        double v = 0;
        for (int s = 1; s <= n; ++s) v += k1[s - 1] * P[s][n - s];
        m[n] = v;
    }
    return {m.begin() + 1, m.end()};
}

GridMeasure sym_mixture(int m = 2000) { return semicircle_mixture({0.5, 0.5}, {-0.5, 0.5}, {0.75, 0.75}, m); }

double sup_err_on(const std::vector<double>& x, const std::function<double(double)>& f,
                  const std::function<double(double)>& g, double lo, double hi) {
    double e = 0;
    for (double t : x)
        if (t >= lo && t <= hi) e = std::max(e, std::abs(f(t) - g(t)));
    return e;
}

}  // namespace

// ---------------------------------------------------------------------------
// GridMeasure basics

TEST(GridMeasure, SemicircleSupportAndCatalanMoments) {
    const auto S = semicircle(1.0, 2000);
    EXPECT_DOUBLE_EQ(S.a(), -2.0);
    EXPECT_DOUBLE_EQ(S.b(), 2.0);
    EXPECT_NEAR(S.moment(4), 2.0, 1e-10);
    EXPECT_NEAR(S.moment(3), 0.0, 1e-12);
    for (int p = 1; p <= 12; ++p) {
        const double want = p % 2 ? 0.0 : catalan(p / 2);
        EXPECT_NEAR(S.moment(p), want, 1e-6 * std::max(1.0, want)) << p;
        EXPECT_NEAR(semicircle_moment(p), want, 1e-12 * std::max(1.0, want)) << p;
    }
    const auto S3 = semicircle(3.0, 2000);
    for (int p = 2; p <= 8; p += 2) EXPECT_NEAR(S3.moment(p), catalan(p / 2) * std::pow(3.0, p / 2), 1e-6 * std::pow(3.0, p / 2));
}

TEST(GridMeasure, MassAndQuantileInvariants) {
    for (const auto& mu : {semicircle(1.0, 500), sym_mixture(700), quartic_gibbs(0.3, 600),
                           semicircle_mixture({0.3, 0.7}, {-0.7, 0.3}, {0.79, 0.79}, 900)}) {
        EXPECT_NEAR(mu.integrate([](double) { return 1.0; }), 1.0, 1e-12);
        double wsum = 0;
        for (double w : mu.node_weights()) wsum += w;
        EXPECT_NEAR(wsum, 1.0, 1e-12);
        EXPECT_NEAR(mu.cumulative().back(), 1.0, 1e-12);
        for (double f : mu.density()) EXPECT_GE(f, 0.0);
        double prev = -INFINITY;
        for (int i = 1; i < 200; ++i) {
            const double p = i / 200.0;
            const double q = mu.quantile(p);
            EXPECT_GE(q, prev);
            EXPECT_NEAR(mu.cdf(q), p, 1e-9);
            prev = q;
        }
    }
}

TEST(GridMeasure, CdfMatchesClosedForm) {
    const auto S = semicircle(1.0, 400);
    for (double x = -1.95; x < 2; x += 0.1) EXPECT_NEAR(S.cdf(x), semicircle_cdf(x, 0, 1), 1e-9) << x;
}

TEST(GridMeasure, RejectsBadInput) {
    EXPECT_THROW(GridMeasure(0, 1, {0.5, -0.1, 0.5}), DomainError);
    EXPECT_THROW(GridMeasure(0, 1, {0.5, NAN, 0.5}), DomainError);
    EXPECT_THROW(GridMeasure(0, 1, {3, 3, 3}), DomainError);  // mass 3
    EXPECT_THROW(semicircle(-1.0), DomainError);
}

TEST(GridMeasure, JsonRoundTrip) {
    const auto mu = sym_mixture(300);
    const auto back = grid_measure_from_json(mu.to_json());
    EXPECT_EQ(back.size(), mu.size());
    for (int p = 1; p <= 6; ++p) EXPECT_NEAR(back.moment(p), mu.moment(p), 1e-12);
    EXPECT_THROW(grid_measure_from_json(nlohmann::json{{"type", "density"}}), std::exception);
}

TEST(GridMeasure, DilateTranslate) {
    const auto mu = sym_mixture(1000);
    const auto d = mu.dilate(1.7);
    const auto t = mu.translate(0.4);
    for (int p = 1; p <= 6; ++p) EXPECT_NEAR(d.moment(p), std::pow(1.7, p) * mu.moment(p), 1e-10 * std::pow(1.7, p) * 10);
    EXPECT_NEAR(t.mean(), 0.4, 1e-12);
    EXPECT_NEAR(t.variance(), mu.variance(), 1e-12);
}

TEST(GridMeasure, FreePoissonMatchesCumulantOracle) {
    for (double lambda : {2.0, 4.0, 9.0}) {
        const auto mu = free_poisson(lambda, 4000);
        std::vector<double> k{0, 1};
        for (int p = 3; p <= 6; ++p) k.push_back(std::pow(lambda, 1 - p / 2.0));
        const auto want = moments_from_cumulants(k);
        EXPECT_NEAR(mu.mean(), 0, 1e-12);
        EXPECT_NEAR(mu.variance(), 1, 1e-12);
        for (int p = 3; p <= 6; ++p) EXPECT_NEAR(mu.moment(p), want[p - 1], 2e-4 * std::max(1.0, want[p - 1])) << lambda << " " << p;
    }
    EXPECT_THROW(free_poisson(1.0), DomainError);
}

// ---------------------------------------------------------------------------
// Entropy, Fisher information, W2

TEST(Entropy, SemicircleValue) {
    for (double rho : {1.0, 2.0, 0.5}) {
        const auto S = semicircle(1 / rho, 2000);
        EXPECT_NEAR(free_entropy(S), 0.5 * std::log(2 * pi * std::exp(1.0) / rho), 1e-6) << rho;
    }
}

TEST(Entropy, DilationShiftsByLog) {
    const auto mu = sym_mixture(1500);
    for (double lam : {0.5, 2.0, 3.0}) EXPECT_NEAR(free_entropy(mu.dilate(lam)), free_entropy(mu) + std::log(lam), 1e-6);
    EXPECT_NEAR(free_entropy(mu.translate(0.7)), free_entropy(mu), 1e-9);
}

TEST(Entropy, RelativeEntropyMinimizedBySemicircle) {
    const double base = relative_entropy(semicircle(1.0, 2000), 1.0);
    for (const auto& T : bundled_family(800)) EXPECT_GE(relative_entropy(T.mu, 1.0) - base, -1e-7) << T.label;
    EXPECT_GT(relative_entropy(sym_mixture(), 1.0) - base, 1e-3);
}

TEST(Fisher, SemicircleConjugateVariableIsX) {
    const auto S = semicircle(1.0, 2000);
    const auto cv = conjugate_variable(S);
    double e = 0;
    for (std::size_t i = 0; i < cv.x.size(); ++i)
        if (std::abs(cv.x[i]) < 1.9) e = std::max(e, std::abs(cv.xi[i] - cv.x[i]));
    EXPECT_LT(e, 1e-3);
    EXPECT_NEAR(fisher(S), 1.0, 1e-4);
    EXPECT_NEAR(relative_fisher(S, 1.0), 0.0, 1e-4);
}

TEST(Fisher, ScalesWithPrecision) {
    for (double rho : {0.5, 2.0, 4.0}) {
        const auto S = semicircle(1 / rho, 2000);
        EXPECT_NEAR(fisher(S), rho, 1e-4 * rho);
        EXPECT_NEAR(relative_fisher(S, rho), 0.0, 1e-4 * rho);
    }
    const auto mu = sym_mixture(1500);
    EXPECT_NEAR(fisher(mu.dilate(2.0)), fisher(mu) / 4, 1e-6);
}

TEST(Fisher, HilbertTransformOfMixture) {
    // 2 p.v. int dS(c,r^2)(y)/(x-y) = (x-c)/r^2 inside the support. The component edges at
    // +-(2r - 0.5) lie inside the mixture's support, where the density has a square-root kink;
    // the error there decays like h^{1/2}, so the sup is taken 0.05 away from them.
    const std::vector<double> w{0.5, 0.5}, c{-0.5, 0.5}, v{0.75, 0.75};
    auto err = [&](int m, bool at_kink) {
        const auto mu = semicircle_mixture(w, c, v, m);
        const auto cv = conjugate_variable(mu);
        const double kink = 2 * std::sqrt(0.75) - 0.5;
        double e = 0;
        for (std::size_t i = 0; i < cv.x.size(); ++i) {
            const double x = cv.x[i];
            double want = 0;
            for (int j = 0; j < 2; ++j) {
                const double y = (x - c[j]) / std::sqrt(v[j]);
                const double s = std::abs(y) <= 2 ? y : y - std::copysign(std::sqrt(y * y - 4), y);
                want += w[j] * s / std::sqrt(v[j]);
            }
            if (std::abs(x) > 2.1) continue;  // outer edges at +-2.23
            if ((std::abs(std::abs(x) - kink) < 0.05) == at_kink) e = std::max(e, std::abs(cv.xi[i] - want));
        }
        return e;
    };
    EXPECT_LT(err(2000, false), 1e-3);
    EXPECT_LT(err(4000, true), 0.8 * err(1000, true));
}

TEST(W2, Oracles) {
    const auto S = semicircle(1.0, 2000);
    EXPECT_NEAR(w2(S, S), 0.0, 1e-12);
    for (double sig : {0.5, 1.5, 2.0}) EXPECT_NEAR(w2(S, semicircle(sig * sig, 1500)), std::abs(sig - 1), 1e-6);
    const auto mu = sym_mixture(1200);
    for (double c : {0.3, -1.2}) EXPECT_NEAR(w2(mu, mu.translate(c)), std::abs(c), 1e-9);
}

TEST(W2, MixtureAgainstIndependentQuantiles) {
    const std::vector<double> w{0.3, 0.7}, c{-0.7, 0.3}, v{0.79, 0.79};
    const double oracle = mixture_w2_oracle(w, c, v);
    EXPECT_NEAR(oracle, 0.07443973, 1e-7);  // frozen; the midpoint rule converges to 0.0744397337
    // interior square-root kinks of the mixture leave a few 1e-6 of grid noise
    EXPECT_NEAR(w2(semicircle_mixture(w, c, v, 2000), semicircle(1.0, 2000)), oracle, 5e-6);
}

TEST(W2, RichardsonRefinement) {
    // Halving the step leaves w2 unchanged to first order.
    const std::vector<double> w{0.3, 0.7}, c{-0.7, 0.3}, v{0.79, 0.79};
    for (int m : {100, 200, 400, 800}) {
        const double coarse = w2(semicircle_mixture(w, c, v, m), semicircle(1.0, m));
        const double fine = w2(semicircle_mixture(w, c, v, 2 * m - 1), semicircle(1.0, 2 * m - 1));
        EXPECT_NEAR(coarse / fine, 1.0, 0.05) << m;
    }
}

// ---------------------------------------------------------------------------
// Equilibrium

TEST(Equilibrium, QuadraticGivesSemicircle) {
    auto r = equilibrium_measure([](double x) { return x * x / 2; }, -3, 3, 2000);
    EXPECT_LT(r.el_residual, 1e-3);
    EXPECT_LT(w2(r.measure, semicircle(1.0, 2000)), 1e-3);
    EXPECT_FALSE(r.touches_window);
}

TEST(Equilibrium, PrecisionAndConstant) {
    auto r2 = equilibrium_measure([](double x) { return x * x; }, -2, 2, 1500);
    EXPECT_LT(w2(r2.measure, semicircle(0.5, 1500)), 1e-3);
    auto a = equilibrium_measure([](double x) { return x * x / 2; }, -3, 3, 1000);
    auto b = equilibrium_measure([](double x) { return x * x / 2 + 5; }, -3, 3, 1000);
    EXPECT_LT(w2(a.measure, b.measure), 1e-6);
    EXPECT_NEAR(b.lambda - a.lambda, -5.0, 1e-4);
}

TEST(Equilibrium, QuarticMatchesClosedForm) {
    const double g = 0.25;
    auto r = equilibrium_measure([g](double x) { return x * x / 2 + g * x * x * x * x; }, -2.5, 2.5, 2000);
    EXPECT_LT(w2(r.measure, quartic_gibbs(g, 2000)), 1e-3);
    EXPECT_NEAR(r.measure.moment(2), quartic_gibbs(g, 2000).moment(2), 1e-4);
}

TEST(Equilibrium, RejectsNonConvex) {
    EXPECT_THROW(equilibrium_measure([](double x) { return -x * x; }, -1, 1, 200), DomainError);
}

// ---------------------------------------------------------------------------
// Moment maps and kernels

TEST(MomentMap, SemicircleIsIdentity) {
    const auto S = semicircle(1.0, 2000);
    const auto u = moment_map(S);
    EXPECT_LT(u.residual, 1e-3);
    double e = 0;
    for (std::size_t i = 0; i < u.x.size(); ++i)
        if (std::abs(u.x[i]) <= 2) e = std::max(e, std::abs(u.du[i] - u.x[i]));
    EXPECT_LT(e, 1e-2);
    EXPECT_NEAR(u.potential(1.0), 0.5, 1e-2);
    EXPECT_NEAR(u.inverse_derivative(0.7), 0.7, 1e-2);
}

TEST(MomentMap, DilatedSemicircleIsLinear) {
    // nu for u' = a x is S(0, 1/a); pushing it by a x gives S(0, a), so a = sigma^2.
    const double var = 2.0;
    const auto u = moment_map(semicircle(var, 2000));
    EXPECT_LT(u.residual, 1e-3);
    double e = 0;
    for (std::size_t i = 0; i < u.x.size(); ++i)
        if (std::abs(u.x[i]) <= 2 / std::sqrt(var)) e = std::max(e, std::abs(u.du[i] - var * u.x[i]));
    EXPECT_LT(e, 2e-2);
}

TEST(MomentMap, RoundTripQuartic) {
    // u = x^2/2 + g x^4: nu_u is the quartic law, mu = (u')_# nu_u; solving again recovers u'.
    // The recovery is measured in L2(nu), the norm of the transport residual; the sup norm is
    // limited by the support endpoints and only checked absolutely.
    const double g = 0.05;
    auto up = [g](double t) { return t + 4 * g * t * t * t; };
    auto upp = [g](double t) { return 1 + 12 * g * t * t; };
    const auto nu = quartic_gibbs(g, 2000);
    const auto mu = pushforward(nu, up, upp, 2000);
    EXPECT_NEAR(mu.mean(), 0.0, 1e-10);
    for (double tol : {1e-3, 1e-5}) {
        MomentMapSettings s;
        s.tol = tol;
        const auto u = moment_map(mu, s);
        EXPECT_LT(u.residual, tol);
        const double l2 = std::sqrt(nu.integrate([&](double t) { return std::pow(u.derivative(t) - up(t), 2); }));
        EXPECT_LT(l2, 2 * tol) << tol;
        EXPECT_LT(w2(*u.gibbs, nu), 2 * tol) << tol;
        if (tol < 1e-4) {
            EXPECT_LT(sup_err_on(u.x, [&](double t) { return u.derivative(t); }, up, nu.a(), nu.b()), 1e-3);
        }
    }
}

TEST(MomentMap, BundledPushforwardResidual) {
    for (const auto& T : bundled_family(800)) {
        if (T.label == "semicircle") continue;
        const auto u = moment_map(T.mu);
        EXPECT_LT(u.residual, 1e-3) << T.label;
        for (std::size_t i = 0; i + 1 < u.du.size(); ++i) ASSERT_LE(u.du[i], u.du[i + 1]);
    }
}

TEST(MomentMap, RejectsUncentered) {
    EXPECT_THROW(moment_map(semicircle(1.0, 400).translate(0.3)), PreconditionError);
}

TEST(Kernel, SemicircleKernelIsOne) {
    const auto S = semicircle(1.0, 1000);
    const auto u = moment_map(S);
    const auto K = kernel_from_moment_map(u, S);
    EXPECT_LT(K.stein_residual, 1e-3);
    EXPECT_LT(K.sq_distance_to_one, 1e-4);
    EXPECT_NEAR(generator_residual(S, Eigen::MatrixXd::Ones(S.size(), S.size())), 0.0, 1e-9);
}

TEST(Kernel, MixtureBoundsAndResidual) {
    const auto mu = sym_mixture(1000);
    const auto u = moment_map(mu);
    const auto K = kernel_from_moment_map(u, mu);
    EXPECT_LT(K.stein_residual, 1e-3);
    EXPECT_GE(K.gibbs_bound, K.sq_distance_to_one * (1 - 1e-3));
    const double d = w2(mu, semicircle(1.0, 2000));
    EXPECT_LE(d * d, K.sq_distance_to_one);
    EXPECT_NEAR(generator_residual(mu, K.kernel.A), K.stein_residual, 1e-15);
}

TEST(Kernel, ZeroKernelDefectIsMomentSup) {
    // A = 0 leaves |int x f'(x) dmu| with f' = x^p; for S(0,1) the p = 1 term is 1, the sup C_3 = 5.
    const auto S = semicircle(1.0, 800);
    const double r = generator_residual(S, Eigen::MatrixXd::Zero(S.size(), S.size()));
    double want = 0;
    for (int p = 0; p <= 6; ++p) want = std::max(want, (p + 1) % 2 ? 0.0 : catalan((p + 1) / 2));
    EXPECT_NEAR(r, want, 1e-9);
    EXPECT_NEAR(S.moment(2), 1.0, 1e-12);
}

TEST(Kernel, GeneralPotentialQuadraticReduces) {
    const auto mu = sym_mixture(800);
    const auto G = kernel_general_potential(mu, [](double x) { return x; }, [](double) { return 1.0; });
    const auto K = kernel_from_moment_map(moment_map(mu), mu);
    EXPECT_LT((G.kernel.A - K.kernel.A).cwiseAbs().maxCoeff(), 1e-2);
    EXPECT_LT(G.stein_residual, 1e-3);
}

TEST(Kernel, GibbsStateHasUnitKernel) {
    const double g = 0.1;
    const auto mu = quartic_gibbs(g, 800);
    auto Vp = [g](double x) { return x + 4 * g * x * x * x; };
    const auto G = kernel_general_potential(mu, Vp, [g](double x) { return 1 + 12 * g * x * x; });
    Kernel2D one{mu, Eigen::MatrixXd::Ones(mu.size(), mu.size())};
    EXPECT_LT(stein_residual(one, Vp), 1e-6);  // the unit kernel is admissible; G need not equal it
    EXPECT_LT(G.stein_residual, 1e-3);
}

TEST(Kernel, PerturbedPotentialDefect) {
    // For S(0,1) and V' = x + 4 eps x^3 the unit kernel leaves defect 4 eps sup_p m_{p+3}.
    const double eps = 0.01;
    const auto S = semicircle(1.0, 800);
    Kernel2D one{S, Eigen::MatrixXd::Ones(S.size(), S.size())};
    double want = 0;
    for (int p = 0; p <= 6; ++p) want = std::max(want, (p + 3) % 2 ? 0.0 : 4 * eps * catalan((p + 3) / 2));
    EXPECT_NEAR(stein_residual(one, [eps](double x) { return x + 4 * eps * x * x * x; }), want, 1e-8);
    EXPECT_THROW(kernel_general_potential(S, [](double x) { return x + 1; }, [](double) { return 1.0; }), PreconditionError);
}

// ---------------------------------------------------------------------------
// Free convolution

TEST(OuFlow, MatchesCumulantArithmetic) {
    const auto mu = semicircle_mixture({0.3, 0.7}, {-0.7, 0.3}, {0.79, 0.79}, 1500);
    const auto k = free_cumulants(mu.moments(8));
    for (double t : {0.1, 0.5, 1.0}) {
        std::vector<double> kt(k);
        for (int m = 1; m <= 8; ++m) kt[m - 1] = std::exp(-m * t) * k[m - 1] + (m == 2 ? 1 - std::exp(-2 * t) : 0.0);
        const auto want = moments_from_cumulants(kt);
        const auto got = ou_flow(mu, t).moments(8);
        for (int m = 0; m < 8; ++m) EXPECT_NEAR(got[m], want[m], 1e-6 * std::max(1.0, std::abs(want[m]))) << t << " " << m + 1;
    }
}

TEST(OuFlow, CumulantOracleSelfCheck) {
    const auto k = free_cumulants({0, 1, 0, 2, 0, 5, 0, 14});
    for (int m = 0; m < 8; ++m) EXPECT_NEAR(k[m], m == 1 ? 1.0 : 0.0, 1e-12);
    const auto back = moments_from_cumulants({0.2, 1.1, -0.3, 0.4});
    EXPECT_NEAR(back[1], 1.1 + 0.04, 1e-12);
    const auto kk = free_cumulants(back);
    EXPECT_NEAR(kk[2], -0.3, 1e-12);
    EXPECT_NEAR(kk[3], 0.4, 1e-12);
}

TEST(OuFlow, TimeZeroStationarySymmetric) {
    const auto mu = sym_mixture(800);
    EXPECT_LT(w2(ou_flow(mu, 0), mu), 1e-12);
    const auto S = semicircle(0.5, 1000);
    EXPECT_LT(w2(ou_flow(S, 0.7, 2.0), S), 1e-6);
    const auto f = ou_flow(mu, 0.4);
    EXPECT_NEAR(f.mean(), 0.0, 1e-10);
    EXPECT_NEAR(f.moment(3), 0.0, 1e-10);
    for (double p : {0.1, 0.25, 0.4}) EXPECT_NEAR(f.quantile(p), -f.quantile(1 - p), 1e-6);
    EXPECT_NEAR(f.integrate([](double) { return 1.0; }), 1.0, 1e-9);
}

TEST(OuFlow, FisherAlongDilatedSemicircle) {
    const double v = 2.0;
    const auto S = semicircle(v, 1000);
    for (double t : {0.1, 0.5, 1.5}) {
        const double vt = std::exp(-2 * t) * v + 1 - std::exp(-2 * t);
        EXPECT_NEAR(ou_flow_fisher(S, t), (1 - vt) * (1 - vt) / vt, 1e-6) << t;
    }
}

TEST(FreeClt, PowerMatchesCumulants) {
    const auto mu = semicircle_mixture({0.3, 0.7}, {-0.7, 0.3}, {0.79, 0.79}, 800);
    const auto z = mu.translate(-mu.mean()).dilate(1 / std::sqrt(mu.variance()));
    const auto k = free_cumulants(z.moments(6));
    for (int N : {1, 2, 4}) {
        const auto y = free_clt_power(z, N, 800);
        std::vector<double> kn(k);
        for (int m = 1; m <= 6; ++m) kn[m - 1] = k[m - 1] * N / std::pow(N, m / 2.0);
        const auto want = moments_from_cumulants(kn);
        const auto got = y.moments(6);
        for (int m = 0; m < 6; ++m) EXPECT_NEAR(got[m], want[m], 1e-6 * std::max(1.0, std::abs(want[m]))) << N << " " << m + 1;
    }
}

// ---------------------------------------------------------------------------
// Inequality suite and CLT table

TEST(Suite, SemicircleTrivial) {
    SuiteSettings s;
    s.times = {0.05, 0.5, 2.0};
    const auto R = inequality_suite(semicircle(1.0, 800), s, "semicircle");
    EXPECT_TRUE(R.all_pass());
    for (double x : R.sigma) EXPECT_LT(x, 1e-8);
    EXPECT_NEAR(R.entropy_gap, 0.0, 1e-6);
    EXPECT_NEAR(R.w2_to_semicircle, 0.0, 1e-8);
    const auto j = R.to_json();
    EXPECT_EQ(j.at("label"), "semicircle");
}

TEST(Suite, MixtureMarginsAndDeBruijn) {
    SuiteSettings s;
    s.times = {0.05, 0.3, 1.0, 3.0};
    const auto R = inequality_suite(bundled_family(800)[1].mu, s, "mix");
    EXPECT_TRUE(R.all_pass());
    EXPECT_NEAR(R.debruijn_gap, R.entropy_gap, 1e-3);
    EXPECT_GT(R.entropy_gap, 0);
    ASSERT_EQ(R.sigma.size(), 3u);
    for (double x : R.sigma) EXPECT_GT(x, 0);
    for (const auto& c : R.checks) EXPECT_GE(c.margin, 0) << c.name << " t=" << c.t;
}

TEST(Suite, SkipsOrdersWithoutMatchingMoments) {
    SuiteSettings s;
    s.k = 3;
    s.times = {0.5};
    const auto R = inequality_suite(bundled_family(600)[2].mu, s, "asym");  // third moment nonzero
    bool skipped = false;
    for (const auto& c : R.checks)
        if (c.name == "ws_k3") skipped = !c.notice.empty();
    EXPECT_TRUE(skipped);
    // variance 2: the order-k bounds are reported as skipped, never silently dropped
    s.k = 2;
    const auto W = inequality_suite(semicircle(2.0, 400), s, "wide");
    int notices = 0;
    for (const auto& c : W.checks) notices += !c.notice.empty();
    EXPECT_GT(notices, 0);
}

TEST(Suite, TruncatedDiscrepancyGrowsWithDegree) {
    // Moments agree with S(0,1) through m_4 (centers +-sqrt(2/3), component variance 1/3), so
    // the (4,6) truncation barely sees the difference; raising d must not lower Sigma_1.
    const auto mu = semicircle_mixture({0.5, 0.5}, {-std::sqrt(2.0 / 3), std::sqrt(2.0 / 3)}, {1.0 / 3, 1.0 / 3}, 800);
    EXPECT_NEAR(mu.moment(4), 2.0, 1e-4);
    const auto tr = TraceState<double>::moment_table(mu.moments(20), std::max(-mu.a(), mu.b()));
    double prev = 0;
    for (int d = 4; d <= 8; d += 2) {
        const auto sol = solve_min_norm(assemble(tr, 1.0, 1, d, d + 2));
        ASSERT_TRUE(sol.feasible);
        EXPECT_GE(sol.discrepancy, prev - 1e-10) << d;
        prev = sol.discrepancy;
    }
    EXPECT_GT(prev, 1e-2);
}

TEST(Clt, SemicircleGapsVanish) {
    const auto T = entropic_clt_table(semicircle(1.0, 800), 2, {2, 4}, 800);
    for (const auto& r : T.rows) {
        EXPECT_NEAR(r.entropy_gap, 0.0, 1e-6);
        EXPECT_DOUBLE_EQ(r.sigma, std::pow(r.N, -2.0));
    }
}

TEST(Clt, MixtureGapDecreases) {
    const auto T = entropic_clt_table(bundled_family(800)[1].mu, 2, {1, 2, 4, 8}, 800);
    EXPECT_TRUE(T.gap_nonincreasing);
    for (std::size_t i = 1; i < T.rows.size(); ++i) EXPECT_LE(T.rows[i].entropy_gap, T.rows[i - 1].entropy_gap + 1e-8);
    EXPECT_LT(T.decay_exponent, 0);
    EXPECT_THROW(entropic_clt_table(bundled_family(600)[2].mu, 3, {2}), PreconditionError);
}

TEST(Clt, LogLogSlope) {
    EXPECT_NEAR(loglog_slope({1, 2, 4, 8}, {1, 0.5, 0.25, 0.125}), -1.0, 1e-12);
    EXPECT_THROW(loglog_slope({1}, {1}), DimensionError);
}
