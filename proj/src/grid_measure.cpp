#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

#include "freestein/errors.hpp"
#include "freestein/measures1d.hpp"

namespace freestein {

namespace {

// Gauss-Legendre nodes/weights on [0, 1].
struct UnitGauss {
    std::vector<double> x, w;
    explicit UnitGauss(int n) {
        auto fill = [&](const auto& abs, const auto& wts) {
            for (std::size_t i = 0; i < abs.size(); ++i) {
                const double a = abs[i], wt = wts[i];
                if (a == 0) {
                    x.push_back(0.5);
                    w.push_back(wt / 2);
                } else {
                    x.push_back(0.5 - a / 2);
                    w.push_back(wt / 2);
                    x.push_back(0.5 + a / 2);
                    w.push_back(wt / 2);
                }
            }
        };
        if (n == 8)
            fill(boost::math::quadrature::gauss<double, 8>::abscissa(), boost::math::quadrature::gauss<double, 8>::weights());
        else if (n == 16)
            fill(boost::math::quadrature::gauss<double, 16>::abscissa(),
                 boost::math::quadrature::gauss<double, 16>::weights());
        else
            throw DimensionError("UnitGauss: unsupported order");
    }
};

const UnitGauss& gauss8() {
    static const UnitGauss g(8);
    return g;
}
const UnitGauss& gauss16() {
    static const UnitGauss g(16);
    return g;
}

}  // namespace

namespace detail {

// g(tau) = g0 (1 - tau) + g1 tau + k tau (1 - tau): squared density on one cell.
struct Cell {
    double g0, g1, k;
    double g(double t) const { return g0 * (1 - t) + g1 * t + k * t * (1 - t); }
};

namespace {

// Roots of g strictly inside (lo, hi), ascending.
int cell_roots(const Cell& c, double lo, double hi, double r[2]) {
    const double A = -c.k, B = c.g1 - c.g0 + c.k, C = c.g0;
    double cand[2];
    int n = 0;
    if (std::abs(A) <= 1e-14 * (std::abs(B) + std::abs(C))) {
        if (B != 0) cand[n++] = -C / B;
    } else {
        const double disc = B * B - 4 * A * C;
        if (disc >= 0) {
            const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
            if (q != 0) {
                cand[n++] = q / A;
                cand[n++] = C / q;
            } else {
                cand[n++] = 0;
            }
        }
    }
    int m = 0;
    for (int i = 0; i < n; ++i)
        if (cand[i] > lo && cand[i] < hi) r[m++] = cand[i];
    if (m == 2 && r[0] > r[1]) std::swap(r[0], r[1]);
    return m;
}

void gauss_on(const UnitGauss& G, double p, double q, const Cell& c, std::vector<double>& tau, std::vector<double>& wt) {
    for (std::size_t i = 0; i < G.x.size(); ++i) {
        const double t = p + (q - p) * G.x[i];
        tau.push_back(t);
        wt.push_back(G.w[i] * (q - p) * std::sqrt(std::max(0.0, c.g(t))));
    }
}

// t = z -/+ r^2 about a zero z of g: the integrand sqrt(g) 2r is smooth in r.
void root_substitution(double z, double far, const Cell& c, std::vector<double>& tau, std::vector<double>& wt) {
    const auto& G = gauss16();
    const double R = std::sqrt(std::abs(far - z)), sg = far > z ? 1.0 : -1.0;
    for (std::size_t i = 0; i < G.x.size(); ++i) {
        const double r = R * G.x[i];
        const double t = z + sg * r * r;
        tau.push_back(t);
        wt.push_back(G.w[i] * R * 2 * r * std::sqrt(std::max(0.0, c.g(t))));
    }
}

// Positive segment without interior zeros: grade toward a small end.
void graded(double p, double q, const Cell& c, std::vector<double>& tau, std::vector<double>& wt, int depth) {
    const double gp = c.g(p), gq = c.g(q), gm = c.g(0.5 * (p + q));
    const double gmax = std::max({gp, gq, gm});
    if (depth >= 8 || std::min(gp, gq) >= 0.25 * gmax) {
        gauss_on(depth ? gauss16() : gauss8(), p, q, c, tau, wt);
        return;
    }
    const double mid = 0.5 * (p + q);
    graded(p, mid, c, tau, wt, depth + 1);
    graded(mid, q, c, tau, wt, depth + 1);
}

}  // namespace

// Nodes/weights for the integral of phi(tau) sqrt(g(tau)) over [lo, hi].
void sqrt_nodes(const Cell& c, double lo, double hi, std::vector<double>& tau, std::vector<double>& wt) {
    if (!(hi > lo)) return;
    double r[2];
    const int nr = cell_roots(c, lo, hi, r);
    std::vector<double> pts{lo};
    std::vector<bool> zero{false};
    for (int i = 0; i < nr; ++i) {
        pts.push_back(r[i]);
        zero.push_back(true);
    }
    pts.push_back(hi);
    zero.push_back(false);
    const double scale = std::max({std::abs(c.g0), std::abs(c.g1), std::abs(c.k), 1e-300});
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (c.g(pts[i]) <= 1e-13 * scale) zero[i] = true;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double p = pts[i], q = pts[i + 1];
        if (!(q > p) || c.g(0.5 * (p + q)) <= 0) continue;
        if (zero[i] && zero[i + 1]) {
            const double mid = 0.5 * (p + q);
            root_substitution(p, mid, c, tau, wt);
            root_substitution(q, mid, c, tau, wt);
        } else if (zero[i]) {
            root_substitution(p, q, c, tau, wt);
        } else if (zero[i + 1]) {
            root_substitution(q, p, c, tau, wt);
        } else {
            graded(p, q, c, tau, wt, 0);
        }
    }
}

double sqrt_integral(const Cell& c, double lo, double hi) {
    thread_local std::vector<double> t, w;
    t.clear();
    w.clear();
    sqrt_nodes(c, lo, hi, t, w);
    double s = 0;
    for (double x : w) s += x;
    return s;
}

}  // namespace detail

using detail::Cell;

namespace {

// Per-cell curvature term of the squared density from nodal second differences. A stencil is
// skipped when it touches a zero node with a zero neighbour (outside the support), so that
// square-root edges inside the window fall back to the linear model.
std::vector<double> cell_curvature(const std::vector<double>& f) {
    const int m = static_cast<int>(f.size());
    std::vector<double> g(m);
    for (int i = 0; i < m; ++i) g[i] = f[i] * f[i];
    auto exterior = [&](int i) { return g[i] == 0 && ((i > 0 && g[i - 1] == 0) || (i + 1 < m && g[i + 1] == 0)); };
    std::vector<double> d2(m, NAN);
    for (int i = 1; i + 1 < m; ++i)
        if (!exterior(i - 1) && !exterior(i) && !exterior(i + 1)) d2[i] = g[i - 1] - 2 * g[i] + g[i + 1];
    d2[0] = d2[1];
    d2[m - 1] = d2[m - 2];
    std::vector<double> k(m - 1, 0.0);
    for (int j = 0; j + 1 < m; ++j) {
        const bool l = std::isfinite(d2[j]), r = std::isfinite(d2[j + 1]);
        if (l && r)
            k[j] = -0.25 * (d2[j] + d2[j + 1]);
        else if (l)
            k[j] = -0.5 * d2[j];
        else if (r)
            k[j] = -0.5 * d2[j + 1];
    }
    return k;
}

}  // namespace

double Quadrature::integrate(const std::function<double(double)>& g) const {
    double s = 0;
    for (std::size_t i = 0; i < this->s.size(); ++i) s += w[i] * g(this->s[i]);
    return s;
}

GridMeasure::GridMeasure(double a, double b, std::vector<double> density, double mass_tol)
    : a_(a), b_(b), f_(std::move(density)) {
    if (f_.size() < 3) throw DimensionError("GridMeasure: need at least 3 nodes");
    if (!(std::isfinite(a) && std::isfinite(b) && a < b)) throw DomainError("GridMeasure: invalid support");
    for (double v : f_)
        if (!std::isfinite(v) || v < 0) throw DomainError("GridMeasure: density must be finite and nonnegative");
    h_ = (b_ - a_) / (f_.size() - 1);
    kappa_ = cell_curvature(f_);
    double M = 0;
    for (std::size_t j = 0; j + 1 < f_.size(); ++j)
        M += h_ * detail::sqrt_integral(Cell{f_[j] * f_[j], f_[j + 1] * f_[j + 1], kappa_[j]}, 0, 1);
    raw_mass_ = M;
    if (!(M > 0) || std::abs(M - 1) > mass_tol)
        throw DomainError("GridMeasure: mass " + std::to_string(M) + " differs from 1");
    for (double& v : f_) v /= M;
    for (double& k : kappa_) k /= M * M;
    build();
}

GridMeasure GridMeasure::from_function(double a, double b, int m, const std::function<double(double)>& f,
                                       double mass_tol) {
    if (m < 3) throw DimensionError("GridMeasure: need at least 3 nodes");
    std::vector<double> d(m);
    const double h = (b - a) / (m - 1);
    for (int i = 0; i < m; ++i) d[i] = std::max(0.0, f(i == m - 1 ? b : a + h * i));
    return GridMeasure(a, b, std::move(d), mass_tol);
}

void GridMeasure::build() {
    const int m = size();
    cum_.assign(m, 0.0);
    quad_.s.clear();
    quad_.w.clear();
    nodew_.assign(m, 0.0);
    celloff_.assign(m, 0);
    std::vector<double> tau, wt;
    for (int j = 0; j + 1 < m; ++j) {
        celloff_[j] = quad_.s.size();
        tau.clear();
        wt.clear();
        detail::sqrt_nodes(Cell{f_[j] * f_[j], f_[j + 1] * f_[j + 1], kappa_[j]}, 0, 1, tau, wt);
        double mass = 0;
        for (std::size_t k = 0; k < tau.size(); ++k) {
            const double w = h_ * wt[k];
            if (w == 0) continue;
            mass += w;
            quad_.s.push_back(node(j) + h_ * tau[k]);
            quad_.w.push_back(w);
            nodew_[j] += w * (1 - tau[k]);
            nodew_[j + 1] += w * tau[k];
        }
        cum_[j + 1] = cum_[j] + mass;
    }
    celloff_[m - 1] = quad_.s.size();
}

void GridMeasure::cell_quadrature(int j, double lo, double hi, std::vector<double>& x, std::vector<double>& w) const {
    std::vector<double> tau, wt;
    detail::sqrt_nodes(Cell{f_[j] * f_[j], f_[j + 1] * f_[j + 1], kappa_[j]}, lo, hi, tau, wt);
    for (std::size_t k = 0; k < tau.size(); ++k) {
        x.push_back(node(j) + h_ * tau[k]);
        w.push_back(h_ * wt[k]);
    }
}

std::vector<double> GridMeasure::nodes() const {
    std::vector<double> x(size());
    for (int i = 0; i < size(); ++i) x[i] = node(i);
    return x;
}

double GridMeasure::density_at(double x) const {
    if (x < a_ || x > b_) return 0;
    const int j = std::min(size() - 2, static_cast<int>((x - a_) / h_));
    const double tau = std::clamp((x - node(j)) / h_, 0.0, 1.0);
    return std::sqrt(std::max(0.0, Cell{f_[j] * f_[j], f_[j + 1] * f_[j + 1], kappa_[j]}.g(tau)));
}

double GridMeasure::cdf(double x) const {
    if (x <= a_) return 0;
    if (x >= b_) return 1;
    const int j = std::min(size() - 2, static_cast<int>((x - a_) / h_));
    const double tau = std::clamp((x - node(j)) / h_, 0.0, 1.0);
    const Cell c{f_[j] * f_[j], f_[j + 1] * f_[j + 1], kappa_[j]};
    return std::clamp(cum_[j] + h_ * detail::sqrt_integral(c, 0, tau), 0.0, 1.0);
}

double GridMeasure::quantile(double p) const {
    if (!(p >= 0 && p <= 1)) throw DomainError("quantile: level outside [0, 1]");
    const int m = size();
    // first cell whose right cumulative reaches p and which carries mass
    int j = static_cast<int>(std::lower_bound(cum_.begin() + 1, cum_.end(), p) - cum_.begin()) - 1;
    j = std::clamp(j, 0, m - 2);
    while (j < m - 2 && cum_[j + 1] - cum_[j] <= 0) ++j;
    while (j > 0 && cum_[j + 1] - cum_[j] <= 0) --j;
    const double mass = cum_[j + 1] - cum_[j];
    if (!(mass > 0)) return node(j);
    const double r = std::clamp(p - cum_[j], 0.0, mass) / h_;
    const Cell c{f_[j] * f_[j], f_[j + 1] * f_[j + 1], kappa_[j]};
    // safeguarded Newton on F(tau) = r, F' = sqrt(g)
    double lo = 0, hi = 1, t = r / (mass / h_);
    for (int it = 0; it < 60; ++it) {
        const double F = detail::sqrt_integral(c, 0, t) - r;
        if (F > 0)
            hi = t;
        else
            lo = t;
        if (std::abs(F) <= 1e-15 * (mass / h_) || hi - lo < 1e-15) break;
        const double d = std::sqrt(std::max(0.0, c.g(t)));
        double tn = d > 0 ? t - F / d : 0.5 * (lo + hi);
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        t = tn;
    }
    return node(j) + h_ * t;
}

double GridMeasure::moment(int p) const {
    double s = 0;
    for (std::size_t k = 0; k < quad_.s.size(); ++k) s += quad_.w[k] * std::pow(quad_.s[k], p);
    return s;
}

std::vector<double> GridMeasure::moments(int L) const {
    std::vector<double> m(L, 0.0);
    for (std::size_t k = 0; k < quad_.s.size(); ++k) {
        double v = quad_.w[k];
        for (int p = 0; p < L; ++p) {
            v *= quad_.s[k];
            m[p] += v;
        }
    }
    return m;
}

double GridMeasure::variance() const {
    const double mu = mean();
    return integrate([&](double x) { return (x - mu) * (x - mu); });
}

GridMeasure GridMeasure::dilate(double lambda) const {
    if (!(lambda > 0)) throw DomainError("dilate: factor must be positive");
    std::vector<double> f(f_);
    for (double& v : f) v /= lambda;
    return GridMeasure(lambda * a_, lambda * b_, std::move(f));
}

GridMeasure GridMeasure::translate(double c) const { return GridMeasure(a_ + c, b_ + c, f_); }

nlohmann::json GridMeasure::to_json() const {
    return {{"type", "density"}, {"support", {a_, b_}}, {"grid_size", size()}, {"density", f_}};
}

GridMeasure grid_measure_from_json(const nlohmann::json& j, double mass_tol) {
    if (!j.is_object() || j.value("type", "") != "density") throw ParseError("measure: expected type \"density\"");
    if (!j.contains("support") || !j["support"].is_array() || j["support"].size() != 2)
        throw ParseError("measure: field \"support\" must be [a, b]");
    if (!j.contains("density") || !j["density"].is_array()) throw ParseError("measure: field \"density\" missing");
    const auto dens = j["density"].get<std::vector<double>>();
    if (j.contains("grid_size") && j["grid_size"].get<std::size_t>() != dens.size())
        throw ParseError("measure: grid_size does not match density length");
    return GridMeasure(j["support"][0].get<double>(), j["support"][1].get<double>(), dens, mass_tol);
}

GridMeasure semicircle(double var, int m) {
    if (!(var > 0)) throw DomainError("semicircle: variance must be positive");
    const double r = 2 * std::sqrt(var);
    return GridMeasure::from_function(-r, r, m, [&](double x) {
        return std::sqrt(std::max(0.0, r * r - x * x)) / (2 * M_PI * var);
    });
}

double semicircle_moment(int p, double var) {
    if (p < 0) throw DomainError("semicircle_moment: negative order");
    if (p % 2) return 0;
    const int n = p / 2;
    double c = 1;  // Catalan number C_n
    for (int i = 0; i < n; ++i) c = c * 2 * (2 * i + 1) / (i + 2);
    return c * std::pow(var, n);
}

GridMeasure semicircle_mixture(const std::vector<double>& w, const std::vector<double>& c, const std::vector<double>& v,
                               int m) {
    if (w.empty() || w.size() != c.size() || w.size() != v.size())
        throw DimensionError("semicircle_mixture: mismatched component lists");
    double lo = INFINITY, hi = -INFINITY, tot = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (!(v[i] > 0) || !(w[i] > 0)) throw DomainError("semicircle_mixture: weights and variances must be positive");
        lo = std::min(lo, c[i] - 2 * std::sqrt(v[i]));
        hi = std::max(hi, c[i] + 2 * std::sqrt(v[i]));
        tot += w[i];
    }
    return GridMeasure::from_function(
        lo, hi, m,
        [&](double x) {
            double s = 0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                const double r2 = 4 * v[i] - (x - c[i]) * (x - c[i]);
                if (r2 > 0) s += w[i] / tot * std::sqrt(r2) / (2 * M_PI * v[i]);
            }
            return s;
        },
        1e-2);
}

GridMeasure quartic_gibbs(double g, int m) {
    if (!(g >= 0)) throw DomainError("quartic_gibbs: coupling must be nonnegative");
    const double a2 = g == 0 ? 1.0 : (std::sqrt(1 + 48 * g) - 1) / (24 * g);
    const double R = 2 * std::sqrt(a2);
    return GridMeasure::from_function(-R, R, m, [&](double x) {
        return (0.5 + 4 * g * a2 + 2 * g * x * x) * std::sqrt(std::max(0.0, R * R - x * x)) / M_PI;
    });
}

GridMeasure free_poisson(double lambda, int m) {
    if (!(lambda > 1)) throw DomainError("free_poisson: rate must exceed 1");
    const double r = std::sqrt(lambda), lo = (1 - r) * (1 - r), hi = (1 + r) * (1 + r);
    const auto mu = GridMeasure::from_function((lo - lambda) / r, (hi - lambda) / r, m, [&](double y) {
        const double x = lambda + r * y;
        return x <= 0 ? 0.0 : r * std::sqrt(std::max(0.0, (hi - x) * (x - lo))) / (2 * M_PI * x);
    });
    // the 1/x factor is not of the grid's cell form; restore mean 0 and variance 1 exactly
    return mu.translate(-mu.mean()).dilate(1 / std::sqrt(mu.variance()));
}

}  // namespace freestein
