#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

#include "freestein/errors.hpp"
#include "freestein/measures1d.hpp"

namespace freestein {

namespace {

// Antiderivative of log|t| (alpha + beta t).
inline double log_antiderivative(double t, double L, double alpha, double beta) {
    if (t == 0) return 0;
    return alpha * (t * L - t) + beta * (t * t * L / 2 - t * t / 4);
}

inline double safe_log(double t) { return t == 0 ? 0.0 : std::log(std::abs(t)); }

double pl_value(const GridMeasure& mu, double s) {
    const int j = std::clamp(static_cast<int>((s - mu.a()) / mu.h()), 0, mu.size() - 2);
    const double tau = (s - mu.node(j)) / mu.h();
    return mu.density()[j] * (1 - tau) + mu.density()[j + 1] * tau;
}

}  // namespace

double log_potential_pl(const std::vector<double>& x, const std::vector<double>& f, double y) {
    const std::size_t m = x.size();
    double U = 0;
    double t0 = x[0] - y, L0 = safe_log(t0);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double t1 = x[j + 1] - y, L1 = safe_log(t1);
        const double beta = (f[j + 1] - f[j]) / (x[j + 1] - x[j]);
        if (f[j] != 0 || f[j + 1] != 0) {
            const double alpha = f[j] + beta * (y - x[j]);
            U += log_antiderivative(t1, L1, alpha, beta) - log_antiderivative(t0, L0, alpha, beta);
        }
        t0 = t1;
        L0 = L1;
    }
    return U;
}

double log_energy(const GridMeasure& mu) {
    // E(q) = E(p + r) ~ 2<U_p, q> - <U_p, p>: exact log potential of the piecewise-linear
    // interpolant p plus the first-order correction toward the sqrt-interpolated model q.
    const auto x = mu.nodes();
    const auto& f = mu.density();
    const auto& Q = mu.quadrature();
    double E = 0;
    for (std::size_t k = 0; k < Q.s.size(); ++k) {
        if (Q.w[k] == 0) continue;
        const double q = mu.density_at(Q.s[k]);
        const double ratio = q > 0 ? pl_value(mu, Q.s[k]) / q : 1.0;
        E += Q.w[k] * log_potential_pl(x, f, Q.s[k]) * (2 - ratio);
    }
    if (!std::isfinite(E)) throw NumericError("log_energy: non-finite quadrature");
    return E;
}

double free_entropy(const GridMeasure& mu) { return log_energy(mu) + 0.75 + 0.5 * std::log(2 * M_PI); }

double relative_entropy(const GridMeasure& mu, double rho) {
    if (!(rho > 0)) throw DomainError("relative_entropy: rho must be positive");
    return rho * mu.moment(2) / 2 - free_entropy(mu);
}

double hilbert_pl(const std::vector<double>& x, const std::vector<double>& f, double y) {
    // p.v. integral of f(s)/(y - s) = -sum_cells [alpha (L1 - L0) + beta (t1 - t0)]; log 0 terms cancel
    const std::size_t m = x.size();
    double H = 0;
    double t0 = x[0] - y, L0 = safe_log(t0);
    for (std::size_t j = 0; j + 1 < m; ++j) {
        const double t1 = x[j + 1] - y, L1 = safe_log(t1);
        if (f[j] != 0 || f[j + 1] != 0) {
            const double beta = (f[j + 1] - f[j]) / (x[j + 1] - x[j]);
            const double alpha = f[j] + beta * (y - x[j]);
            H -= alpha * (L1 - L0) + beta * (t1 - t0);
        }
        t0 = t1;
        L0 = L1;
    }
    return 2 * H;
}

ConjugateVariable conjugate_variable(const GridMeasure& mu) {
    ConjugateVariable cv;
    cv.x = mu.nodes();
    const auto& f = mu.density();
    cv.xi.resize(cv.x.size());
    for (std::size_t i = 0; i < cv.x.size(); ++i) cv.xi[i] = hilbert_pl(cv.x, f, cv.x[i]);
    const double fmax = *std::max_element(f.begin(), f.end());
    cv.edge_warning = f.front() > 1e-3 * fmax || f.back() > 1e-3 * fmax;
    return cv;
}

double relative_fisher(const GridMeasure& mu, double rho) {
    const auto x = mu.nodes();
    const auto& f = mu.density();
    const auto& Q = mu.quadrature();
    double s = 0;
    for (std::size_t k = 0; k < Q.s.size(); ++k) {
        if (Q.w[k] == 0) continue;
        const double d = hilbert_pl(x, f, Q.s[k]) - rho * Q.s[k];
        s += Q.w[k] * d * d;
    }
    if (!std::isfinite(s)) throw NumericError("fisher: non-finite quadrature");
    return s;
}

double fisher(const GridMeasure& mu) { return relative_fisher(mu, 0.0); }

double w2(const GridMeasure& mu, const GridMeasure& nu) {
    std::vector<double> br;
    br.reserve(mu.size() + nu.size() + 2);
    for (double c : mu.cumulative()) br.push_back(std::clamp(c, 0.0, 1.0));
    for (double c : nu.cumulative()) br.push_back(std::clamp(c, 0.0, 1.0));
    br.push_back(0);
    br.push_back(1);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    using G = boost::math::quadrature::gauss<double, 8>;
    double s = 0;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        const double lo = br[i], hi = br[i + 1];
        if (hi - lo <= 0) continue;
        s += G::integrate(
            [&](double p) {
                const double d = mu.quantile(p) - nu.quantile(p);
                return d * d;
            },
            lo, hi);
    }
    return std::sqrt(std::max(0.0, s));
}

}  // namespace freestein
