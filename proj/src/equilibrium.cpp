#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <complex>
#include <numeric>
#include <unsupported/Eigen/FFT>

#include "freestein/errors.hpp"
#include "freestein/measures1d.hpp"

namespace freestein {

namespace {

// Piecewise polynomial on [z0, z1], coefficients in increasing degree.
struct Piece {
    double z0, z1;
    std::vector<double> c;
};

// Hat function on [-1, 1] and its self-convolution (the cubic B-spline on [-2, 2]).
const std::vector<Piece> kHat{{-1, 0, {1, 1}}, {0, 1, {1, -1}}};
const std::vector<Piece> kHatHat{{-2, -1, {8 / 6.0, 2, 1, 1 / 6.0}},
                                 {-1, 0, {4 / 6.0, 0, -1, -0.5}},
                                 {0, 1, {4 / 6.0, 0, -1, 0.5}},
                                 {1, 2, {8 / 6.0, -2, 1, -1 / 6.0}}};

// Integral of P(z) log|k - z| over the piece.
double piece_log_integral(const Piece& P, double k) {
    const int n = static_cast<int>(P.c.size());
    if (std::abs(k) < 10) {
        // t = k - z: Q(t) = P(k - t), then exact antiderivatives of t^p log|t|
        std::vector<double> Q(n, 0.0);
        for (int p = 0; p < n; ++p) {
            double binom = 1;
            for (int j = 0; j <= p; ++j) {
                Q[j] += P.c[p] * binom * std::pow(k, p - j) * ((j % 2) ? -1.0 : 1.0);
                binom = binom * (p - j) / (j + 1);
            }
        }
        auto F = [&](double t) {
            if (t == 0) return 0.0;
            const double L = std::log(std::abs(t));
            double s = 0, tp = t;
            for (int p = 0; p < n; ++p, tp *= t) s += Q[p] * tp * (L / (p + 1) - 1.0 / ((p + 1) * (p + 1)));
            return s;
        };
        return F(k - P.z0) - F(k - P.z1);
    }
    return boost::math::quadrature::gauss<double, 16>::integrate(
        [&](double z) {
            double v = 0;
            for (int p = n - 1; p >= 0; --p) v = v * z + P.c[p];
            return v * std::log(std::abs(k - z));
        },
        P.z0, P.z1);
}

std::vector<double> log_table(const std::vector<Piece>& pieces, int n, double logh) {
    std::vector<double> t(n);
    for (int k = 0; k < n; ++k) {
        double s = 0;
        for (const auto& P : pieces) s += piece_log_integral(P, k);
        t[k] = s + logh;
    }
    return t;
}

// Symmetric Toeplitz matrix-vector product by circulant embedding.
class SymToeplitz {
public:
    explicit SymToeplitz(const std::vector<double>& col) : n_(static_cast<int>(col.size())) {
        std::vector<double> c(2 * n_, 0.0);
        for (int i = 0; i < n_; ++i) c[i] = col[i];
        for (int i = 1; i < n_; ++i) c[2 * n_ - i] = col[i];
        fft_.fwd(spec_, c);
    }
    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> xp(2 * n_, 0.0);
        std::copy(x.begin(), x.end(), xp.begin());
        std::vector<std::complex<double>> X;
        fft_.fwd(X, xp);
        for (std::size_t i = 0; i < X.size(); ++i) X[i] *= spec_[i];
        std::vector<double> y;
        fft_.inv(y, X);
        y.resize(n_);
        return y;
    }

private:
    int n_;
    mutable Eigen::FFT<double> fft_;
    std::vector<std::complex<double>> spec_;
};

// Euclidean projection onto the probability simplex.
void project_simplex(std::vector<double>& v) {
    std::vector<double> s(v);
    std::sort(s.begin(), s.end(), std::greater<>());
    double c = 0, theta = 0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        c += s[k];
        const double t = (c - 1) / (k + 1);
        if (s[k] - t > 0) theta = t;
    }
    for (double& x : v) x = std::max(0.0, x - theta);
}

struct DiscreteEquilibrium {
    std::vector<double> w;
    double residual = 0;
    int iterations = 0;
};

// Support mask: weights above cutoff * max.
std::vector<char> support_mask(const std::vector<double>& w, double cutoff) {
    const double wmax = *std::max_element(w.begin(), w.end());
    std::vector<char> s(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) s[i] = w[i] > cutoff * wmax;
    return s;
}

double oscillation(const std::vector<double>& r, const std::vector<char>& mask, double* mid = nullptr) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t i = 0; i < r.size(); ++i)
        if (mask[i]) {
            lo = std::min(lo, r[i]);
            hi = std::max(hi, r[i]);
        }
    if (mid) *mid = 0.5 * (lo + hi);
    return 0.5 * (hi - lo);
}

// FISTA with adaptive restart on  -w'Kw + u'w  over the simplex.
DiscreteEquilibrium solve_discrete(const SymToeplitz& K, const std::vector<double>& u, const EquilibriumSettings& s,
                                   std::vector<double> w0) {
    const int m = static_cast<int>(u.size());
    // Lipschitz constant of the gradient on mass-zero directions, by power iteration
    std::vector<double> v(m);
    for (int i = 0; i < m; ++i) v[i] = std::sin(0.7 * i + 0.3) + 0.1 * std::cos(2.3 * i);
    double L = 0;
    for (int it = 0; it < 60; ++it) {
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / m;
        for (double& x : v) x -= mean;
        auto Kv = K.apply(v);
        const double mk = std::accumulate(Kv.begin(), Kv.end(), 0.0) / m;
        double nrm = 0, dot = 0;
        for (int i = 0; i < m; ++i) {
            Kv[i] = -2 * (Kv[i] - mk);
            dot += Kv[i] * v[i];
            nrm += Kv[i] * Kv[i];
        }
        double vn = 0;
        for (double x : v) vn += x * x;
        L = dot / vn;
        nrm = std::sqrt(nrm);
        for (int i = 0; i < m; ++i) v[i] = Kv[i] / nrm;
    }
    L *= 1.05;

    DiscreteEquilibrium out;
    std::vector<double> w = w0.empty() ? std::vector<double>(m, 1.0 / m) : std::move(w0);
    project_simplex(w);
    std::vector<double> y(w), wn(m), g(m);
    double tk = 1;
    for (int it = 1; it <= s.max_iter; ++it) {
        const auto Ky = K.apply(y);
        for (int i = 0; i < m; ++i) {
            g[i] = -2 * Ky[i] + u[i];
            wn[i] = y[i] - g[i] / L;
        }
        project_simplex(wn);
        double dir = 0;
        for (int i = 0; i < m; ++i) dir += g[i] * (wn[i] - w[i]);
        if (dir > 0 && tk > 1) {
            // momentum works against descent: restart from the current iterate
            tk = 1;
            y = w;
            continue;
        }
        const double tn = 0.5 * (1 + std::sqrt(1 + 4 * tk * tk));
        for (int i = 0; i < m; ++i) y[i] = wn[i] + (tk - 1) / tn * (wn[i] - w[i]);
        w.swap(wn);
        tk = tn;
        if (it % 25 == 0 || it == s.max_iter) {
            auto Kw = K.apply(w);
            for (int i = 0; i < m; ++i) Kw[i] = 2 * Kw[i] - u[i];
            out.residual = oscillation(Kw, support_mask(w, s.cutoff));
            out.iterations = it;
            if (out.residual < s.tol) break;
        }
    }
    out.w = std::move(w);
    return out;
}

EquilibriumResult equilibrium_impl(const std::vector<double>& uvals, double a, double b, const EquilibriumSettings& s,
                                   std::vector<double> w0 = {}) {
    const int m = static_cast<int>(uvals.size());
    if (m < 3) throw DimensionError("equilibrium_measure: need at least 3 nodes");
    if (!(a < b)) throw DomainError("equilibrium_measure: invalid window");
    double scale = 0;
    for (double x : uvals) {
        if (!std::isfinite(x)) throw DomainError("equilibrium_measure: potential not finite on the window");
        scale = std::max(scale, std::abs(x));
    }
    for (int i = 1; i + 1 < m; ++i)
        if (uvals[i - 1] - 2 * uvals[i] + uvals[i + 1] < -1e-9 * std::max(1.0, scale))
            throw DomainError("equilibrium_measure: potential is not convex on the grid");
    const double h = (b - a) / (m - 1);
    const SymToeplitz K(log_table(kHatHat, m, std::log(h)));
    auto D = solve_discrete(K, uvals, s, std::move(w0));
    if (D.residual >= s.tol)
        throw ConvergenceError("equilibrium_measure: residual " + std::to_string(D.residual) + " after " +
                               std::to_string(D.iterations) + " iterations",
                               D.residual);
    // Euler-Lagrange defect with the log potential evaluated at the nodes
    const SymToeplitz K0(log_table(kHat, m, std::log(h)));
    auto U = K0.apply(D.w);
    for (int i = 0; i < m; ++i) U[i] = 2 * U[i] - uvals[i];
    const auto mask = support_mask(D.w, s.cutoff);
    double lambda = 0;
    const double el = oscillation(U, mask, &lambda);
    std::vector<double> f(m);
    for (int i = 0; i < m; ++i) f[i] = D.w[i] / h;
    EquilibriumResult r{GridMeasure(a, b, std::move(f)), el, lambda, D.iterations, mask.front() || mask.back()};
    return r;
}

// u(x) on a grid from samples of u' (trapezoid, u(x0) = 0).
std::vector<double> integrate_table(const std::vector<double>& x, const std::vector<double>& du) {
    std::vector<double> u(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i) u[i] = u[i - 1] + 0.5 * (du[i] + du[i - 1]) * (x[i] - x[i - 1]);
    return u;
}

double interp(const std::vector<double>& x, const std::vector<double>& y, double t) {
    const std::size_t n = x.size();
    std::size_t j;
    if (t <= x.front())
        j = 0;
    else if (t >= x.back())
        j = n - 2;
    else
        j = std::min<std::size_t>(n - 2, std::upper_bound(x.begin(), x.end(), t) - x.begin() - 1);
    const double s = (t - x[j]) / (x[j + 1] - x[j]);
    return y[j] + s * (y[j + 1] - y[j]);
}

// Mass-carrying range of a grid measure.
std::pair<double, double> mass_range(const GridMeasure& mu) {
    const auto& c = mu.cumulative();
    int lo = 0, hi = mu.size() - 1;
    while (lo + 1 < mu.size() && c[lo + 1] <= 0) ++lo;
    while (hi > 0 && c[hi - 1] >= c.back()) --hi;
    return {mu.node(lo), mu.node(hi)};
}

// sqrt of the integral over p in [0, 1] of (T(Q_nu(p)) - Q_mu(p))^2.
double transport_residual(const GridMeasure& nu, const std::function<double(double)>& T, const GridMeasure& mu) {
    std::vector<double> br;
    for (double c : nu.cumulative()) br.push_back(std::clamp(c, 0.0, 1.0));
    for (double c : mu.cumulative()) br.push_back(std::clamp(c, 0.0, 1.0));
    br.push_back(0);
    br.push_back(1);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    using G = boost::math::quadrature::gauss<double, 8>;
    double s = 0;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        if (br[i + 1] <= br[i]) continue;
        s += G::integrate(
            [&](double p) {
                const double d = T(nu.quantile(p)) - mu.quantile(p);
                return d * d;
            },
            br[i], br[i + 1]);
    }
    return std::sqrt(std::max(0.0, s));
}

}  // namespace

EquilibriumResult equilibrium_measure(const std::function<double(double)>& u, double a, double b, int m,
                                      const EquilibriumSettings& s) {
    if (m < 3) throw DimensionError("equilibrium_measure: need at least 3 nodes");
    std::vector<double> uv(m);
    const double h = (b - a) / (m - 1);
    for (int i = 0; i < m; ++i) uv[i] = u(a + h * i);
    return equilibrium_impl(uv, a, b, s);
}

// ---------------------------------------------------------------------------

double MomentMap1D::derivative(double t) const { return interp(x, du, t); }

double MomentMap1D::potential(double t) const {
    // u(0) = 0: integrate the piecewise-linear u' from 0 to t
    auto prim = [&](double s) {
        const auto U = integrate_table(x, du);
        double v;
        if (s <= x.front())
            v = -0.5 * (derivative(s) + du.front()) * (x.front() - s);
        else if (s >= x.back())
            v = U.back() + 0.5 * (derivative(s) + du.back()) * (s - x.back());
        else {
            const std::size_t j = std::upper_bound(x.begin(), x.end(), s) - x.begin() - 1;
            v = U[j] + 0.5 * (du[j] + derivative(s)) * (s - x[j]);
        }
        return v;
    };
    return prim(t) - prim(0.0);
}

double MomentMap1D::inverse_derivative(double y) const {
    const std::size_t n = x.size();
    std::size_t j;
    if (y <= du.front())
        j = 0;
    else if (y >= du.back())
        j = n - 2;
    else
        j = std::min<std::size_t>(n - 2, std::upper_bound(du.begin(), du.end(), y) - du.begin() - 1);
    // skip flat segments
    while (j + 2 < n && du[j + 1] == du[j]) ++j;
    const double dy = du[j + 1] - du[j];
    if (!(dy > 0)) throw NumericError("moment map: u' is not strictly increasing");
    return x[j] + (y - du[j]) / dy * (x[j + 1] - x[j]);
}

double MomentMap1D::second_derivative(double t) const {
    const double h = std::max(1e-12, 0.5 * (x.back() - x.front()) / (x.size() - 1));
    return (derivative(t + h) - derivative(t - h)) / (2 * h);
}

MomentMap1D moment_map(const GridMeasure& mu, const MomentMapSettings& s) {
    const double mean = mu.mean(), var = mu.variance();
    if (!(var > 0)) throw DomainError("moment_map: degenerate measure");
    if (std::abs(mean) > 1e-8 * std::sqrt(var)) throw PreconditionError("moment_map: measure is not centered");
    if (!(s.damping > 0 && s.damping <= 1)) throw DomainError("moment_map: damping must lie in (0, 1]");
    const auto [ya, yb] = mass_range(mu);

    MomentMap1D M;
    // a semicircle of variance var is reached by u' = var * x
    const double r0 = 2 * std::sqrt(var) / var;
    for (int i = 0; i < s.grid; ++i) {
        const double t = -3 * r0 + 6 * r0 * i / (s.grid - 1);
        M.x.push_back(t);
        M.du.push_back(var * t);
    }
    std::vector<double> w0;
    double margin = 0.1;
    for (int it = 0; it < s.max_iter; ++it) {
        const double lo0 = M.inverse_derivative(ya), hi0 = M.inverse_derivative(yb);
        const double a = lo0 - margin * (hi0 - lo0), b = hi0 + margin * (hi0 - lo0);
        std::vector<double> xs(s.grid), dus(s.grid);
        for (int i = 0; i < s.grid; ++i) {
            xs[i] = a + (b - a) * i / (s.grid - 1);
            dus[i] = M.derivative(xs[i]);
        }
        const auto uv = integrate_table(xs, dus);
        auto eq = equilibrium_impl(uv, a, b, s.eq, w0);
        if (eq.touches_window) {
            margin *= 2;
            w0.clear();
            --it;
            if (margin > 10) throw ConvergenceError("moment_map: equilibrium support escapes every window", M.residual);
            continue;
        }
        const GridMeasure& nu = eq.measure;
        M.x = xs;
        M.du = dus;
        M.residual = transport_residual(nu, [&](double t) { return M.derivative(t); }, mu);
        M.history.push_back(M.residual);
        M.iterations = it + 1;
        M.gibbs = nu;
        if (M.residual < s.tol) return M;

        // monotone rearrangement Q_mu o F_nu on supp nu, old increments outside
        const auto [sa, sb] = mass_range(nu);
        const double Ta = ya, Tb = yb;
        const double da = M.derivative(sa), db = M.derivative(sb);
        std::vector<double> next(s.grid);
        for (int i = 0; i < s.grid; ++i) {
            const double t = xs[i];
            double T;
            if (t <= sa)
                T = Ta + (dus[i] - da);
            else if (t >= sb)
                T = Tb + (dus[i] - db);
            else
                T = mu.quantile(std::clamp(nu.cdf(t), 0.0, 1.0));
            next[i] = (1 - s.damping) * dus[i] + s.damping * T;
        }
        for (int i = 1; i < s.grid; ++i) next[i] = std::max(next[i], next[i - 1]);
        M.du = next;
        // warm start on the next window is only valid when it coincides; keep it simple
        w0.clear();
    }
    throw ConvergenceError("moment_map: residual " + std::to_string(M.residual) + " after " +
                           std::to_string(M.iterations) + " iterations",
                           M.residual);
}

GridMeasure pushforward(const GridMeasure& nu, const std::function<double(double)>& T,
                        const std::function<double(double)>& dT, int m) {
    if (m <= 0) m = nu.size();
    const auto [lo, hi] = mass_range(nu);
    const double ya = T(lo), yb = T(hi);
    if (!(yb > ya)) throw DomainError("pushforward: map is not increasing");
    std::vector<double> f(m, 0.0);
    for (int i = 1; i + 1 < m; ++i) {
        const double y = ya + (yb - ya) * i / (m - 1);
        double l = lo, r = hi;
        for (int k = 0; k < 200 && r - l > 1e-15 * std::max(1.0, std::abs(l)); ++k) {
            const double c = 0.5 * (l + r);
            (T(c) < y ? l : r) = c;
        }
        const double x = 0.5 * (l + r), d = dT(x);
        if (!(d > 0)) throw DomainError("pushforward: derivative must be positive");
        f[i] = nu.density_at(x) / d;
    }
    // end values from the density at the ends of the mass range
    f[0] = nu.density_at(lo) / dT(lo);
    f[m - 1] = nu.density_at(hi) / dT(hi);
    return GridMeasure(ya, yb, std::move(f));
}

// ---------------------------------------------------------------------------

namespace {

// C(i, a) = int phi_i(x) x^a dmu(x), phi_i the hat function of node i.
Eigen::MatrixXd hat_moments(const GridMeasure& mu, int amax) {
    const int m = mu.size();
    const auto& q = mu.quadrature();
    const auto& off = mu.cell_offsets();
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, amax + 1);
    for (int j = 0; j + 1 < m; ++j)
        for (std::size_t r = off[j]; r < off[j + 1]; ++r) {
            const double t = (q.s[r] - mu.node(j)) / mu.h();
            double xp = q.w[r];
            for (int a = 0; a <= amax; ++a) {
                C(j, a) += (1 - t) * xp;
                C(j + 1, a) += t * xp;
                xp *= q.s[r];
            }
        }
    return C;
}

// sup over p <= 6 of |int V'(x) x^p dmu - double int A D(x^p) dmu dmu|, A bilinear between nodes.
// D(x^p) = sum_{a+b=p-1} x^a y^b separates, so the double integral is exact given A's nodal values.
double weak_defect(const GridMeasure& mu, const Eigen::MatrixXd& A, const std::function<double(double)>& Vp) {
    const int m = mu.size();
    if (A.rows() != m || A.cols() != m) throw DimensionError("stein residual: kernel does not match the grid");
    const Eigen::MatrixXd C = hat_moments(mu, 5);
    const Eigen::MatrixXd AC = A * C;
    double worst = 0;
    for (int p = 0; p <= 6; ++p) {
        const double lhs = mu.integrate([&](double t) { return Vp(t) * std::pow(t, p); });
        double rhs = 0;
        for (int a = 0; a + 1 <= p; ++a) rhs += C.col(a).dot(AC.col(p - 1 - a));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

double weighted_sq_dev(const GridMeasure& mu, const Eigen::MatrixXd& A) {
    const auto& W = mu.node_weights();
    double s = 0;
    for (int i = 0; i < mu.size(); ++i)
        for (int j = 0; j < mu.size(); ++j) s += W[i] * W[j] * (A(i, j) - 1) * (A(i, j) - 1);
    return s;
}

void check_strict(const MomentMap1D& u) {
    for (std::size_t i = 0; i + 1 < u.du.size(); ++i)
        if (!(u.du[i + 1] > u.du[i])) throw NumericError("kernel: u' is not strictly increasing (singular kernel)");
}

}  // namespace

double stein_residual(const Kernel2D& K, const std::function<double(double)>& Vprime) {
    return weak_defect(K.mu, K.A, Vprime);
}

double generator_residual(const GridMeasure& mu, const Eigen::MatrixXd& A) {
    return weak_defect(mu, A, [](double t) { return t; });
}

MomentKernel kernel_from_moment_map(const MomentMap1D& u, const GridMeasure& mu) {
    check_strict(u);
    const int m = mu.size();
    const auto x = mu.nodes();
    std::vector<double> t(m);
    for (int i = 0; i < m; ++i) t[i] = u.inverse_derivative(x[i]);
    Eigen::MatrixXd A(m, m);
    for (int i = 0; i < m; ++i) {
        A(i, i) = u.second_derivative(t[i]);
        for (int j = 0; j < i; ++j) A(i, j) = A(j, i) = (x[i] - x[j]) / (t[i] - t[j]);
    }
    MomentKernel out{Kernel2D{mu, std::move(A)}, 0, 0, 0};
    out.stein_residual = generator_residual(mu, out.kernel.A);
    out.sq_distance_to_one = weighted_sq_dev(mu, out.kernel.A);
    if (u.gibbs) {
        const GridMeasure& nu = *u.gibbs;
        const int n = nu.size();
        const auto s = nu.nodes();
        const auto& W = nu.node_weights();
        double b = 0;
        for (int i = 0; i < n; ++i) {
            if (W[i] == 0) continue;
            for (int j = 0; j < n; ++j) {
                if (W[j] == 0) continue;
                const double q = i == j ? u.second_derivative(s[i])
                                        : (u.derivative(s[i]) - u.derivative(s[j])) / (s[i] - s[j]);
                b += W[i] * W[j] * (q - 1) * (q - 1);
            }
        }
        out.gibbs_bound = b;
    }
    return out;
}

GeneralKernel kernel_general_potential(const GridMeasure& mu, const std::function<double(double)>& Vprime,
                                       const std::function<double(double)>& Vsecond, const MomentMapSettings& s) {
    const double c = mu.integrate(Vprime);
    const double sc = std::sqrt(mu.integrate([&](double t) { return Vprime(t) * Vprime(t); }));
    if (std::abs(c) > 1e-8 * std::max(1.0, sc))
        throw PreconditionError("kernel_general_potential: integral of V' against mu is not zero");
    const auto [lo, hi] = mass_range(mu);
    for (int i = 0; i < mu.size(); ++i) {
        const double t = mu.node(i);
        if (t >= lo && t <= hi && !(Vsecond(t) > 0))
            throw DomainError("kernel_general_potential: V is not strictly convex on the support");
    }
    const GridMeasure muV = pushforward(mu, Vprime, Vsecond);
    GeneralKernel out{Kernel2D{mu, Eigen::MatrixXd()}, moment_map(muV, s), 0};
    check_strict(out.map);
    const int m = mu.size();
    const auto x = mu.nodes();
    std::vector<double> t(m);
    for (int i = 0; i < m; ++i) t[i] = out.map.inverse_derivative(Vprime(x[i]));
    Eigen::MatrixXd A(m, m);
    for (int i = 0; i < m; ++i) {
        A(i, i) = out.map.second_derivative(t[i]) / Vsecond(x[i]);
        for (int j = 0; j < i; ++j) A(i, j) = A(j, i) = (x[i] - x[j]) / (t[i] - t[j]);
    }
    out.kernel.A = std::move(A);
    out.stein_residual = stein_residual(out.kernel, Vprime);
    return out;
}

}  // namespace freestein
