// Free convolution with a semicircle and free convolution powers, through the boundary values
// of the subordination function: omega = u + i v traces the curve on which the subordination
// equation has a real image point x(u); the density of the convolution at x(u) is read off v.

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>

#include "freestein/errors.hpp"
#include "freestein/measures1d.hpp"

namespace freestein {

namespace {

// I0 = int dmu / |w - y|^2, I1 = int (u - y) dmu / |w - y|^2 and their partial derivatives, w = u + i v.
struct Poisson {
    double I0 = 0, I1 = 0, I0u = 0, I0v = 0, I1u = 0, I1v = 0;
};

class PoissonIntegrator {
public:
    explicit PoissonIntegrator(const GridMeasure& mu) : mu_(mu) {
        const auto& c = mu.cumulative();
        lo_ = 0;
        hi_ = mu.size() - 1;
        while (lo_ + 1 < mu.size() && c[lo_ + 1] <= 0) ++lo_;
        while (hi_ > 0 && c[hi_ - 1] >= c.back()) --hi_;
    }

    double mass_lo() const { return mu_.node(lo_); }
    double mass_hi() const { return mu_.node(hi_); }

    Poisson eval(double u, double v) const {
        Poisson P;
        const auto& Q = mu_.quadrature();
        const auto& off = mu_.cell_offsets();
        const double h = mu_.h();
        for (int j = lo_; j < hi_; ++j) {
            const double x0 = mu_.node(j), x1 = x0 + h;
            const double d = u < x0 ? x0 - u : (u > x1 ? u - x1 : 0.0);
            if (d * d + v * v >= 16 * h * h) {
                for (std::size_t k = off[j]; k < off[j + 1]; ++k) add(P, u, v, Q.s[k], Q.w[k]);
            } else {
                refine(P, u, v, j, 0.0, 1.0, 0);
            }
        }
        return P;
    }

private:
    const GridMeasure& mu_;
    int lo_, hi_;

    static void add(Poisson& P, double u, double v, double y, double w) {
        const double a = u - y, D = a * a + v * v;
        if (D == 0 || w == 0) return;
        const double iD = 1 / D, iD2 = iD * iD;
        P.I0 += w * iD;
        P.I1 += w * a * iD;
        P.I0u += -2 * w * a * iD2;
        P.I0v += -2 * w * v * iD2;
        P.I1u += w * (v * v - a * a) * iD2;
        P.I1v += -2 * w * a * v * iD2;
    }

    // Split the cell until each piece is short compared with its distance to the pole.
    void refine(Poisson& P, double u, double v, int j, double p, double q, int depth) const {
        const double h = mu_.h();
        const double x0 = mu_.node(j) + h * p, x1 = mu_.node(j) + h * q;
        const double d = u < x0 ? x0 - u : (u > x1 ? u - x1 : 0.0);
        const double dist = std::sqrt(d * d + v * v);
        if (depth >= 48 || (x1 - x0) <= 0.5 * dist) {
            thread_local std::vector<double> xs, ws;
            xs.clear();
            ws.clear();
            mu_.cell_quadrature(j, p, q, xs, ws);
            for (std::size_t k = 0; k < xs.size(); ++k) add(P, u, v, xs[k], ws[k]);
            return;
        }
        // split at the pole's abscissa when it lies inside, else at the midpoint
        double mid = 0.5 * (p + q);
        const double tu = (u - mu_.node(j)) / h;
        if (tu > p + 1e-3 * (q - p) && tu < q - 1e-3 * (q - p)) mid = tu;
        refine(P, u, v, j, p, mid, depth + 1);
        refine(P, u, v, j, mid, q, depth + 1);
    }
};

// Point on the boundary curve.
struct CurvePoint {
    double u = 0, v = 0, x = 0, density = 0;
};

// Boundary curve of a subordination problem: v(u) and the image point x(u).
class BoundaryCurve {
public:
    virtual ~BoundaryCurve() = default;
    virtual CurvePoint at(double u, double vguess) const = 0;
    double ul = 0, ur = 0;  // edges: v = 0 outside
};

// Bisection for a decreasing function crossing zero on [a, b].
template <class F>
double bisect_decreasing(F f, double a, double b) {
    for (int i = 0; i < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++i) {
        const double c = 0.5 * (a + b);
        (f(c) > 0 ? a : b) = c;
    }
    return 0.5 * (a + b);
}

// mu boxplus semicircle of variance s.
class SemicircleCurve : public BoundaryCurve {
public:
    SemicircleCurve(const GridMeasure& mu, double s) : P_(mu), s_(s) {
        const double a = P_.mass_lo(), b = P_.mass_hi(), reach = 1.01 * std::sqrt(s) + 1e-12;
        ur = bisect_decreasing([&](double u) { return P_.eval(u, 0).I0 * s_ - 1; }, b, b + reach);
        ul = -bisect_decreasing([&](double u) { return P_.eval(-u, 0).I0 * s_ - 1; }, -a, -a + reach);
    }

    double solve_v(double u, double vguess) const {
        // log I0(u, v) + log s is decreasing in v and negative beyond sqrt(s)
        double lo = 0, hi = 1.01 * std::sqrt(s_);
        double v = (vguess > 0 && vguess < hi) ? vguess : 0.5 * hi;
        for (int it = 0; it < 200; ++it) {
            const auto q = P_.eval(u, v);
            const double phi = std::log(q.I0 * s_);
            if (phi > 0)
                lo = v;
            else
                hi = v;
            if (std::abs(phi) < 1e-15 || hi - lo < 1e-15 * hi) break;
            // Newton step in log v
            const double dphi = v * q.I0v / q.I0;
            double vn = dphi < 0 ? v * std::exp(-phi / dphi) : 0.5 * (lo + hi);
            if (!(vn > lo && vn < hi)) vn = lo > 0 ? std::sqrt(lo * hi) : 0.5 * hi;
            v = vn;
            if (hi < 1e-300) return 0;
        }
        return hi < 1e-14 * std::sqrt(s_) ? 0.0 : v;
    }

    CurvePoint at(double u, double vguess) const override {
        CurvePoint c;
        c.u = u;
        c.v = (u <= ul || u >= ur) ? 0.0 : solve_v(u, vguess);
        const auto q = P_.eval(u, c.v);
        c.x = u + s_ * q.I1;
        c.density = c.v / (M_PI * s_);
        return c;
    }

    // Conjugate variable 2 I1 and the Jacobian dx/du at a curve point.
    void flow_quantities(const CurvePoint& c, double& xi, double& dxdu) const {
        const auto q = P_.eval(c.u, c.v);
        xi = 2 * q.I1;
        const double dv = c.v > 0 ? -q.I0u / q.I0v : 0.0;
        dxdu = 1 + s_ * (q.I1u + q.I1v * dv);
    }

private:
    PoissonIntegrator P_;
    double s_;
};

// N-fold free convolution power: N |G(w)|^2 = (N - 1) I0 on the curve.
class PowerCurve : public BoundaryCurve {
public:
    PowerCurve(const GridMeasure& mu, int N) : P_(mu), N_(N) {
        const double a = P_.mass_lo(), b = P_.mass_hi();
        auto psi0 = [&](double u) {
            const auto q = P_.eval(u, 0);
            return N_ * q.I1 * q.I1 / q.I0 - (N_ - 1);
        };
        double span = b - a, far = b + span;
        while (psi0(far) <= 0) far += span;
        ur = bisect_decreasing([&](double u) { return -psi0(u); }, b, far);
        far = a - span;
        while (psi0(far) <= 0) far -= span;
        ul = bisect_decreasing([&](double u) { return psi0(u); }, far, a);
        scale_ = std::sqrt(static_cast<double>(N_)) * span;
    }

    double psi(double u, double v) const {
        const auto q = P_.eval(u, v);
        return N_ * (q.I1 * q.I1 + v * v * q.I0 * q.I0) / q.I0 - (N_ - 1);
    }

    double solve_v(double u, double vguess) const {
        // largest root: step down from a positive value, then bisect
        double hi = vguess > 0 ? 2 * vguess : scale_;
        while (psi(u, hi) <= 0) hi *= 2;
        double lo = hi;
        do {
            hi = lo;
            lo = hi * 0.5;
            if (lo < 1e-14 * scale_) return 0;
        } while (psi(u, lo) > 0);
        // Illinois iteration on the bracket (psi(lo) <= 0 < psi(hi))
        double flo = psi(u, lo), fhi = psi(u, hi);
        int side = 0;
        for (int i = 0; i < 100 && hi - lo > 1e-15 * hi; ++i) {
            const double c = (lo * fhi - hi * flo) / (fhi - flo);
            const double fc = psi(u, c);
            if (fc == 0) return c;
            if (fc > 0) {
                hi = c;
                fhi = fc;
                if (side == 1) flo *= 0.5;
                side = 1;
            } else {
                lo = c;
                flo = fc;
                if (side == -1) fhi *= 0.5;
                side = -1;
            }
        }
        return 0.5 * (lo + hi);
    }

    CurvePoint at(double u, double vguess) const override {
        CurvePoint c;
        c.u = u;
        c.v = (u <= ul || u >= ur) ? 0.0 : solve_v(u, vguess);
        const auto q = P_.eval(u, c.v);
        const double G2 = q.I1 * q.I1 + c.v * c.v * q.I0 * q.I0;
        c.x = N_ * u - (N_ - 1) * q.I1 / G2;
        c.density = c.v * q.I0 / M_PI;
        return c;
    }

private:
    PoissonIntegrator P_;
    int N_;
    double scale_;
};

// Samples the curve on a cosine grid in u and resamples the density on a uniform x grid.
GridMeasure resample(const BoundaryCurve& C, int m, int table = 1025) {
    const double c = 0.5 * (C.ul + C.ur), r = 0.5 * (C.ur - C.ul);
    std::vector<CurvePoint> T(table);
    double vprev = 0;
    for (int k = 0; k < table; ++k) {
        const double u = c - r * std::cos(M_PI * k / (table - 1));
        T[k] = C.at(u, vprev);
        vprev = T[k].v;
    }
    for (int k = 1; k < table; ++k)
        if (!(T[k].x >= T[k - 1].x)) throw NumericError("free convolution: image of the boundary curve is not monotone");
    const double xa = T.front().x, xb = T.back().x;
    std::vector<double> f(m, 0.0);
    std::size_t k = 0;
    for (int i = 1; i + 1 < m; ++i) {
        const double xi = xa + (xb - xa) * i / (m - 1);
        while (k + 2 < T.size() && T[k + 1].x < xi) ++k;
        // Illinois iteration on x(u) = xi within [u_k, u_{k+1}]
        CurvePoint A = T[k], B = T[k + 1];
        double fa = A.x - xi, fb = B.x - xi;
        CurvePoint M = std::abs(fa) < std::abs(fb) ? A : B;
        int side = 0;
        for (int it = 0; it < 100 && fa * fb < 0; ++it) {
            const double u = (A.u * fb - B.u * fa) / (fb - fa);
            M = C.at(u, 0.5 * (A.v + B.v));
            const double fm = M.x - xi;
            if (std::abs(fm) <= 1e-14 * std::max(1.0, std::abs(xi)) || B.u - A.u < 1e-15 * std::max(1.0, std::abs(u)))
                break;
            if (fm * fb < 0) {
                A = B;
                fa = fb;
                side = 0;
            } else if (side == 1) {
                fa *= 0.5;
            }
            B = M;
            fb = fm;
            if (side == 0) side = 1;
            if (A.u > B.u) {
                std::swap(A, B);
                std::swap(fa, fb);
            }
        }
        f[i] = M.density;
    }
    return GridMeasure(xa, xb, std::move(f));
}

}  // namespace

GridMeasure ou_flow(const GridMeasure& mu, double t, double rho, int m) {
    if (!(t >= 0)) throw DomainError("ou_flow: time must be nonnegative");
    if (!(rho > 0)) throw DomainError("ou_flow: rho must be positive");
    if (t == 0) return mu;
    if (m <= 0) m = mu.size();
    const GridMeasure md = mu.dilate(std::exp(-t));
    const SemicircleCurve C(md, (1 - std::exp(-2 * t)) / rho);
    return resample(C, m);
}

double ou_flow_fisher(const GridMeasure& mu, double t, double rho) {
    if (!(t > 0)) throw DomainError("ou_flow_fisher: time must be positive");
    if (!(rho > 0)) throw DomainError("ou_flow_fisher: rho must be positive");
    const GridMeasure md = mu.dilate(std::exp(-t));
    const double s = (1 - std::exp(-2 * t)) / rho;
    const SemicircleCurve C(md, s);
    const double c = 0.5 * (C.ul + C.ur), r = 0.5 * (C.ur - C.ul);
    // integral of (xi - rho x)^2 p(x) dx = integral over u of (...)^2 (v / pi s) x'(u), u = c - r cos(theta)
    using G = boost::math::quadrature::gauss<double, 16>;
    const int panels = 48;
    double total = 0, vprev = 0;
    for (int p = 0; p < panels; ++p) {
        const double a = M_PI * p / panels, b = M_PI * (p + 1) / panels;
        for (std::size_t i = 0; i < G::abscissa().size(); ++i) {
            for (int sg : {-1, 1}) {
                const double z = G::abscissa()[i] * sg;
                if (i == 0 && sg == 1 && G::abscissa()[0] == 0) continue;
                const double th = 0.5 * (a + b) + 0.5 * (b - a) * z;
                const double w = G::weights()[i] * 0.5 * (b - a);
                const CurvePoint pt = C.at(c - r * std::cos(th), vprev);
                vprev = pt.v;
                if (pt.v <= 0) continue;
                double xi, dxdu;
                C.flow_quantities(pt, xi, dxdu);
                const double d = xi - rho * pt.x;
                total += w * d * d * pt.density * dxdu * r * std::sin(th);
            }
        }
    }
    if (!std::isfinite(total)) throw NumericError("ou_flow_fisher: non-finite quadrature");
    return total;
}

GridMeasure free_clt_power(const GridMeasure& mu, int N, int m) {
    if (N < 1) throw DomainError("free_clt_power: N must be positive");
    if (N == 1) return mu;
    if (m <= 0) m = mu.size();
    const PowerCurve C(mu, N);
    return resample(C, m).dilate(1 / std::sqrt(static_cast<double>(N)));
}

}  // namespace freestein
