#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>

#include "freestein/errors.hpp"
#include "freestein/measures1d.hpp"
#include "freestein/steinsolve.hpp"
#include "freestein/tracestate.hpp"

namespace freestein {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double entropy_gap(const GridMeasure& mu) { return 0.5 * mu.moment(2) - free_entropy(mu) + 0.5 * std::log(2 * M_PI); }

// Centers and rescales to variance 1; both maps are exact on the grid model.
GridMeasure standardize(const GridMeasure& mu) {
    const GridMeasure c = mu.translate(-mu.mean());
    return c.dilate(1 / std::sqrt(c.variance()));
}

// Highest order p with |m_j - semicircle m_j| <= tol for all j <= p (capped at L).
int matching_order(const GridMeasure& mu, int L, double tol) {
    const auto m = mu.moments(L);
    for (int j = 1; j <= L; ++j)
        if (std::abs(m[j - 1] - semicircle_moment(j)) > tol * std::max(1.0, semicircle_moment(j))) return j - 1;
    return L;
}

InequalityCheck make_check(std::string name, double t, double lhs, double rhs, double rel_tol) {
    InequalityCheck c;
    c.name = std::move(name);
    c.t = t;
    c.lhs = lhs;
    c.rhs = rhs;
    c.margin = rhs - lhs;
    // relative tolerance, floored at the same absolute size for quantities that vanish
    c.pass = std::isfinite(c.margin) && c.margin >= -rel_tol * std::max({1.0, std::abs(lhs), std::abs(rhs)});
    return c;
}

InequalityCheck skipped(std::string name, double t, std::string why) {
    InequalityCheck c;
    c.name = std::move(name);
    c.t = t;
    c.lhs = c.rhs = c.margin = kNaN;
    c.pass = true;
    c.notice = std::move(why);
    return c;
}

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

bool SuiteReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

nlohmann::json SuiteReport::to_json() const {
    nlohmann::json sig = nlohmann::json::array();
    for (double s : sigma) sig.push_back(num(s));
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : checks) {
        nlohmann::json j{{"name", c.name}, {"t", c.t},           {"lhs", num(c.lhs)},
                         {"rhs", num(c.rhs)}, {"margin", num(c.margin)}, {"pass", c.pass}};
        if (!c.notice.empty()) j["notice"] = c.notice;
        cs.push_back(j);
    }
    return {{"label", label},
            {"sigma", sig},
            {"truncated", true},
            {"fisher", num(fisher)},
            {"entropy_gap", num(entropy_gap)},
            {"debruijn_gap", num(debruijn_gap)},
            {"w2_to_semicircle", num(w2_to_semicircle)},
            {"w2_flow_bound", num(w2_flow_bound)},
            {"checks", cs},
            {"all_pass", all_pass()}};
}

SuiteReport inequality_suite(const GridMeasure& mu, const SuiteSettings& s, const std::string& label) {
    if (s.k < 1) throw DomainError("inequality_suite: k must be at least 1");
    if (!(s.rel_tol > 0)) throw DomainError("inequality_suite: tolerance must be positive");
    SuiteReport R;
    R.label = label;
    const double mean = mu.mean(), var = mu.variance();
    const bool standard = std::abs(mean) <= 1e-8 && std::abs(var - 1) <= 1e-8;

    // truncated discrepancies from the moment table, orders 1..max(k, 3)
    const int kmax = std::max(s.k, 3);
    for (int j = 1; j <= kmax; ++j) {
        double sig = kNaN;
        try {
            const int L = stein_required_degree(j, s.d, s.D);
            const auto tr = TraceState<double>::moment_table(mu.moments(L));
            const auto sol = solve_min_norm(assemble(tr, 1.0, j, s.d, s.D));
            if (sol.feasible) sig = sol.discrepancy;
        } catch (const std::exception&) {
            sig = kNaN;
        }
        R.sigma.push_back(sig);
    }
    auto sigma = [&](int j) { return R.sigma[j - 1]; };

    R.fisher = relative_fisher(mu, 1.0);
    R.entropy_gap = entropy_gap(mu);
    R.w2_to_semicircle = w2(mu, semicircle(1.0, mu.size()));

    std::vector<double> sn, sw;
    {
        // de Bruijn in s = 1 - e^{-2t}, dt = ds / (2 (1 - s)): Gauss panels graded toward s = 0
        using G = boost::math::quadrature::gauss<double, 16>;
        const int panels = std::max(1, s.debruijn_nodes / 16);
        std::vector<double> br{0.0};
        for (int p = panels - 1; p >= 1; --p) br.push_back(std::pow(0.25, p));
        br.push_back(1.0);
        for (std::size_t p = 0; p + 1 < br.size(); ++p) {
            const double a = br[p], b = br[p + 1];
            for (std::size_t i = 0; i < G::abscissa().size(); ++i)
                for (int sg : {-1, 1}) {
                    if (sg == 1 && G::abscissa()[i] == 0) continue;
                    sn.push_back(0.5 * (a + b) + 0.5 * (b - a) * sg * G::abscissa()[i]);
                    sw.push_back(0.5 * (b - a) * G::weights()[i]);
                }
        }
    }
    double db = 0, wb = 0;
    for (std::size_t i = 0; i < sn.size(); ++i) {
        const double t = -0.5 * std::log1p(-sn[i]);
        const double phi = std::max(0.0, ou_flow_fisher(mu, t, 1.0));
        db += sw[i] * phi / (2 * (1 - sn[i]));
        wb += sw[i] * std::sqrt(phi) / (2 * (1 - sn[i]));
    }
    R.debruijn_gap = db;
    R.w2_flow_bound = wb;

    const std::string pre = standard ? "" : "measure is not centered with unit variance";
    // Fisher information along the flow
    for (double t : s.times) {
        const double phi_t = ou_flow_fisher(mu, t, 1.0);
        for (int j = 1; j <= s.k; ++j) {
            const std::string name = "fisher_flow_k" + std::to_string(j);
            if (!pre.empty() || !std::isfinite(sigma(j))) {
                R.checks.push_back(skipped(name, t, pre.empty() ? "no kernel of order " + std::to_string(j) : pre));
                continue;
            }
            const double rhs = std::exp(-2.0 * (j + 1) * t) / std::pow(1 - std::exp(-2 * t), j) * sigma(j) * sigma(j);
            R.checks.push_back(make_check(name, t, phi_t, rhs, s.rel_tol));
        }
    }
    // HSI forms
    for (int j = 1; j <= s.k; ++j) {
        const std::string name = "hsi_k" + std::to_string(j);
        if (!pre.empty() || !std::isfinite(sigma(j))) {
            R.checks.push_back(skipped(name, 0, pre.empty() ? "no kernel of order " + std::to_string(j) : pre));
            continue;
        }
        const double rhs = 0.5 * std::min(R.fisher, std::pow(R.fisher, (j - 1.0) / j) * std::pow(sigma(j), 2.0 / j));
        R.checks.push_back(make_check(name, 0, R.entropy_gap, rhs, s.rel_tol));
    }
    if (!pre.empty() || !std::isfinite(sigma(1))) {
        R.checks.push_back(skipped("hsi_fathi_nelson", 0, pre.empty() ? "no kernel of order 1" : pre));
    } else {
        const double s2 = sigma(1) * sigma(1);
        const double rhs = s2 > 0 ? 0.5 * s2 * std::log1p(R.fisher / s2) : 0.0;
        R.checks.push_back(make_check("hsi_fathi_nelson", 0, R.entropy_gap, rhs, s.rel_tol));
    }
    // WS forms
    if (!pre.empty() || !std::isfinite(sigma(1)) || !std::isfinite(sigma(2))) {
        R.checks.push_back(skipped("ws_k2", 0, pre.empty() ? "no kernel of order 2" : pre));
    } else {
        const double s1 = sigma(1), s2 = sigma(2);
        double rhs = s2;
        if (s2 > 0 && s1 > 0) rhs = std::max(s2 * (1 - std::log(s2 / s1)), s2);
        R.checks.push_back(make_check("ws_k2", 0, R.w2_to_semicircle, rhs, s.rel_tol));
    }
    for (int j = 3; j <= kmax; ++j) {
        const std::string name = "ws_k" + std::to_string(j);
        if (!pre.empty() || !std::isfinite(sigma(1)) || !std::isfinite(sigma(j))) {
            R.checks.push_back(skipped(name, 0, pre.empty() ? "no kernel of order " + std::to_string(j) : pre));
            continue;
        }
        const double rhs = std::pow(sigma(1), 1 - 1.0 / (j - 1)) * std::pow(sigma(j), 1.0 / (j - 1));
        R.checks.push_back(make_check(name, 0, R.w2_to_semicircle, rhs, s.rel_tol));
    }
    R.checks.push_back(make_check("w2_flow", 0, R.w2_to_semicircle, R.w2_flow_bound, s.rel_tol));
    return R;
}

std::vector<TestMeasure> bundled_family(int m) {
    std::vector<TestMeasure> F;
    auto add = [&](std::string label, const GridMeasure& g) {
        const GridMeasure z = standardize(g);
        F.push_back({std::move(label), z, matching_order(z, 12, 1e-9)});
    };
    add("semicircle", semicircle(1.0, m));
    add("symmetric_mixture", semicircle_mixture({0.5, 0.5}, {-0.5, 0.5}, {0.75, 0.75}, m));
    add("asymmetric_mixture", semicircle_mixture({0.3, 0.7}, {-0.7, 0.3}, {0.79, 0.79}, m));
    add("quartic_gibbs", quartic_gibbs(0.1, m));
    add("quartic_gibbs_strong", quartic_gibbs(1.0, m));
    return F;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DimensionError("loglog_slope: need two or more points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0 && y[i] > 0)) throw DomainError("loglog_slope: values must be positive");
        const double a = std::log(x[i]), b = std::log(y[i]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

nlohmann::json CltTable::to_json() const {
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows)
        rs.push_back({{"N", r.N},
                      {"available", r.available},
                      {"entropy_gap", num(r.entropy_gap)},
                      {"sigma", r.sigma},
                      {"bound", num(r.bound)}});
    return {{"k", k},
            {"base_fisher", num(base_fisher)},
            {"rows", rs},
            {"decay_exponent", num(decay_exponent)},
            {"gap_nonincreasing", gap_nonincreasing}};
}

CltTable entropic_clt_table(const GridMeasure& base, int k, const std::vector<int>& Ns, int m) {
    if (k < 1) throw DomainError("entropic_clt_table: k must be at least 1");
    if (matching_order(base, std::max(k, 2), 1e-8) < std::max(k, 2))
        throw PreconditionError("entropic_clt_table: base moments do not match the semicircle to the requested order");
    CltTable T;
    T.k = k;
    T.base_fisher = relative_fisher(base, 1.0);
    std::vector<double> xs, ys;
    double prev = kNaN;
    for (int N : Ns) {
        CltEntry e;
        e.N = N;
        e.sigma = std::pow(static_cast<double>(N), -k);
        e.bound = std::pow(e.sigma, 1.0 / k) * std::pow(T.base_fisher, (k - 1.0) / k);
        try {
            e.entropy_gap = entropy_gap(free_clt_power(base, N, m));
        } catch (const std::exception&) {
            e.available = false;
            e.entropy_gap = kNaN;
        }
        if (e.available) {
            if (std::isfinite(prev) && e.entropy_gap > prev + 1e-8) T.gap_nonincreasing = false;
            prev = e.entropy_gap;
            if (e.entropy_gap > 0) {
                xs.push_back(N);
                ys.push_back(e.entropy_gap);
            }
        }
        T.rows.push_back(e);
    }
    T.decay_exponent = xs.size() >= 2 ? loglog_slope(xs, ys) : kNaN;
    return T;
}

}  // namespace freestein
