#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "freestein/errors.hpp"
#include "freestein/steinsolve.hpp"
#include "freestein/verify.hpp"

namespace freestein::cli {

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    for (int prec = 6; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

namespace {

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

void check_tol(double tol) {
    if (!(tol > 0)) throw DomainError("tolerance must be positive");
}

void check_kdD(int k, int d, int D) {
    if (k < 1) throw DomainError("--k must be at least 1");
    if (d < 0 || D < 0) throw DomainError("--d and --D must be nonnegative");
    // a kernel of order k pairs with derivatives of degree d - k, which must fit in the test space
    if (D < d - k) throw DomainError("--D must be at least d - k");
}

Report from_identity(const IdentityReport& r) {
    Report out;
    out.json = r.to_json();
    out.ok = r.failures() == 0;
    std::ostringstream csv;
    csv << "group,case,defect,pass\n";
    for (const auto& c : r.checks) csv << c.group << ",\"" << c.case_ << "\"," << fmt(c.defect) << "," << c.pass << "\n";
    out.csv = csv.str();
    return out;
}

IngestOptions centered(bool center) {
    IngestOptions o;
    o.require_centered = true;
    o.auto_center = center;
    return o;
}

GridMeasure need_grid(const Ingested& in, const char* cmd) {
    if (!in.grid) throw ParseError(std::string(cmd) + ": needs a density file");
    return *in.grid;
}

}  // namespace

Report verify_identities(const VerifyArgs& a) {
    if (a.mode == "exact") return from_identity(identity_suite<Rational>(a.deg, a.seed));
    if (a.mode == "float") {
        check_tol(a.tol);
        return from_identity(identity_suite<double>(a.deg, a.seed, a.tol));
    }
    throw DomainError("--mode must be exact or float");
}

Report verify_divergence(const VerifyArgs& a) {
    if (a.mode == "exact") return from_identity(divergence_suite<Rational>(a.k, a.deg, a.seed, a.reps));
    if (a.mode == "float") {
        check_tol(a.tol);
        return from_identity(divergence_suite<double>(a.k, a.deg, a.seed, a.reps, a.tol));
    }
    throw DomainError("--mode must be exact or float");
}

Report stein(const SteinArgs& a) {
    check_kdD(a.k, a.d, a.D);
    check_tol(a.tol);
    if (!(a.rho > 0)) throw DomainError("--rho must be positive");
    const auto in = ingest_measure_file(a.input);
    const auto tr = in.trace();
    const int need = stein_required_degree(a.k, a.d, a.D);
    if (in.kind != "covariance" && static_cast<int>(in.moments.size()) < need)
        throw TruncationError("stein: the input has " + std::to_string(in.moments.size()) + " moments, (k, d, D) needs " +
                              std::to_string(need));
    const auto sys = assemble(tr, a.rho, a.k, a.d, a.D);
    const auto sol = solve_min_norm(sys);
    const auto match = moment_match_report(tr, a.rho, a.k, a.tol);

    Report r;
    r.json = to_json(sol);
    r.json["rho"] = a.rho;
    r.json["truncated"] = true;
    r.json["input"] = in.summary();
    r.json["moment_match"] = match.to_json();
    nlohmann::json fails = nlohmann::json::array();
    if (!sol.feasible) fails.push_back({{"check", "feasible"}, {"residual", sol.residual}});
    r.json["failures"] = fails;
    r.ok = sol.feasible;
    return r;
}

Report poincare(const PoincareArgs& a) {
    if (a.l < 0 || a.d < 1) throw DomainError("poincare: need l >= 0 and d >= 1");
    const auto in = ingest_measure_file(a.input);
    const auto res = poincare_constant(in.trace(), a.l, a.d, a.cutoff);
    Report r;
    r.json = {{"l", a.l}, {"d", a.d}, {"constant", num(res.constant)}, {"finite", std::isfinite(res.constant)},
              {"input", in.summary()}};
    r.ok = std::isfinite(res.constant);
    return r;
}

Report moment_map_cmd(const MomentMapArgs& a) {
    check_tol(a.tol);
    check_tol(a.kernel_tol);
    const auto in = ingest_measure_file(a.input, centered(a.center));
    const GridMeasure mu = need_grid(in, "moment-map");
    MomentMapSettings s;
    s.grid = a.grid;
    s.tol = a.tol;
    s.damping = a.damping;
    const auto u = moment_map(mu, s);
    const auto K = kernel_from_moment_map(u, mu);
    const double w = w2(mu, semicircle(1.0, std::max(mu.size(), 2000)));
    const double rel = 1e-3 * std::max(1e-12, K.gibbs_bound);

    Report r;
    nlohmann::json fails = nlohmann::json::array();
    auto check = [&](const char* name, double lhs, double rhs) {
        if (!(lhs <= rhs)) fails.push_back({{"check", name}, {"lhs", num(lhs)}, {"rhs", num(rhs)}});
    };
    check("pushforward_residual", u.residual, a.tol);
    check("kernel_stein_residual", K.stein_residual, a.kernel_tol);
    check("discrepancy_bound", K.sq_distance_to_one, K.gibbs_bound + rel);
    check("w2_sq_le_discrepancy", w * w, K.sq_distance_to_one);
    r.json = {{"input", in.summary()},
              {"iterations", u.iterations},
              {"residual", u.residual},
              {"history", u.history},
              {"kernel_stein_residual", K.stein_residual},
              {"sq_distance_to_one", K.sq_distance_to_one},
              {"gibbs_bound", K.gibbs_bound},
              {"w2_to_semicircle", w},
              {"failures", fails}};
    r.ok = fails.empty();
    std::ostringstream csv;
    csv << "x,du,u\n";
    const std::size_t stride = std::max<std::size_t>(1, u.x.size() / 500);
    for (std::size_t i = 0; i < u.x.size(); i += stride)
        csv << fmt(u.x[i]) << "," << fmt(u.du[i]) << "," << fmt(u.potential(u.x[i])) << "\n";
    r.csv = csv.str();
    return r;
}

Report equilibrium_cmd(const EquilibriumArgs& a) {
    check_tol(a.tol);
    if (!(a.rho > 0) || a.quartic < 0) throw DomainError("equilibrium: need rho > 0 and quartic >= 0");
    const double rho = a.rho, g = a.quartic;
    const auto res = equilibrium_measure([=](double x) { return rho * x * x / 2 + g * x * x * x * x; }, a.a, a.b, a.grid);
    Report r;
    nlohmann::json fails = nlohmann::json::array();
    if (!(res.el_residual < a.tol)) fails.push_back({{"check", "el_residual"}, {"value", res.el_residual}});
    if (res.touches_window) fails.push_back({{"check", "support_inside_window"}});
    r.json = {{"rho", rho},
              {"quartic", g},
              {"window", {a.a, a.b}},
              {"grid", a.grid},
              {"iterations", res.iterations},
              {"el_residual", res.el_residual},
              {"lambda", res.lambda},
              {"moments", res.measure.moments(6)}};
    if (g == 0) {
        const double d = w2(res.measure, semicircle(1 / rho, a.grid));
        r.json["w2_to_semicircle"] = d;
        if (!(d < a.tol)) fails.push_back({{"check", "w2_to_semicircle"}, {"value", d}});
    }
    r.json["failures"] = fails;
    r.ok = fails.empty();
    std::ostringstream csv;
    csv << "x,density\n";
    for (int i = 0; i < res.measure.size(); ++i) csv << fmt(res.measure.node(i)) << "," << fmt(res.measure.density()[i]) << "\n";
    r.csv = csv.str();
    return r;
}

Report inequalities_cmd(const InequalityArgs& a) {
    check_kdD(a.k, a.d, a.D);
    check_tol(a.tol);
    std::vector<TestMeasure> family;
    nlohmann::json input;
    if (a.input.empty()) {
        family = bundled_family(a.grid);
        input = "bundled";
    } else {
        const auto in = ingest_measure_file(a.input, centered(a.center));
        family.push_back({a.input, need_grid(in, "inequalities"), in.semicircular_order});
        input = in.summary();
    }
    SuiteSettings s;
    s.k = a.k;
    s.d = a.d;
    s.D = a.D;
    s.times = a.times;
    s.rel_tol = a.tol;
    Report r;
    nlohmann::json reports = nlohmann::json::array(), fails = nlohmann::json::array();
    std::ostringstream csv;
    csv << "measure,check,t,lhs,rhs,margin,pass,notice\n";
    for (const auto& T : family) {
        const auto R = inequality_suite(T.mu, s, T.label);
        reports.push_back(R.to_json());
        for (const auto& c : R.checks) {
            csv << T.label << "," << c.name << "," << fmt(c.t) << "," << fmt(c.lhs) << "," << fmt(c.rhs) << ","
                << fmt(c.margin) << "," << c.pass << ",\"" << c.notice << "\"\n";
            if (!c.pass) fails.push_back({{"measure", T.label}, {"check", c.name}, {"t", c.t}, {"margin", num(c.margin)}});
        }
    }
    r.json = {{"input", input}, {"k", a.k}, {"d", a.d}, {"D", a.D}, {"tol", a.tol}, {"reports", reports}, {"failures", fails}};
    r.ok = fails.empty();
    r.csv = csv.str();
    return r;
}

Report clt_cmd(const CltArgs& a) {
    check_kdD(a.k, a.d, a.D);
    check_tol(a.tol);
    if (a.Ns.empty()) throw DomainError("clt: empty --N list");
    for (int N : a.Ns)
        if (N < 1) throw DomainError("clt: N must be positive");
    const auto in = ingest_measure_file(a.input, centered(a.center));
    GridMeasure base = need_grid(in, "clt");
    const double var = base.variance();
    if (std::abs(var - 1) > 1e-8) {
        if (!a.center) throw PreconditionError("clt: base variance " + std::to_string(var) + " is not 1 (pass --center)");
        base = base.dilate(1 / std::sqrt(var));
    }
    const auto table = entropic_clt_table(base, a.k, a.Ns, a.grid);

    // truncated discrepancies of Y_N from the base cumulants (kappa_1 = 0, kappa_2 = 1 after standardization)
    auto cum = cumulant_moment_transform(base.moments(stein_required_degree(a.k, a.d, a.D)), MomentCumulant::MomentsToCumulants);
    cum[0] = 0;
    cum[1] = 1;
    std::vector<std::vector<double>> weights;
    for (int N : a.Ns) weights.push_back(uniform_weights(N));
    const auto scan = clt_discrepancy_scan(cum, weights, a.k, a.d, a.D);

    Report r;
    nlohmann::json fails = nlohmann::json::array();
    if (!table.gap_nonincreasing) fails.push_back({{"check", "gap_nonincreasing"}});
    std::ostringstream csv;
    csv << "N,sigma,entropy_gap,bound,sq_discrepancy,sq_discrepancy_bound,available\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& e = table.rows[i];
        const auto& row = scan.rows[i];
        csv << e.N << "," << fmt(e.sigma) << "," << fmt(e.entropy_gap) << "," << fmt(e.bound) << ","
            << fmt(row.sq_discrepancy) << "," << fmt(row.bound) << "," << e.available << "\n";
        if (row.feasible && scan.base_feasible && !(row.sq_discrepancy <= row.bound + a.tol))
            fails.push_back({{"check", "sq_discrepancy_bound"}, {"N", e.N}, {"value", row.sq_discrepancy}, {"bound", row.bound}});
    }
    nlohmann::json sc = nlohmann::json::array();
    for (const auto& row : scan.rows)
        sc.push_back({{"N", row.N}, {"feasible", row.feasible}, {"sq_discrepancy", num(row.sq_discrepancy)}, {"bound", num(row.bound)}});
    r.json = {{"input", in.summary()},
              {"entropy", table.to_json()},
              {"discrepancy", {{"k", a.k}, {"d", a.d}, {"D", a.D}, {"base_sq_discrepancy", num(scan.base_sq_discrepancy)}, {"rows", sc}}},
              {"failures", fails}};
    r.ok = fails.empty();
    r.csv = csv.str();
    return r;
}

Report sample(const SampleArgs& a) {
    GridMeasure mu = [&] {
        if (a.kind == "semicircle") return semicircle(a.var, a.grid);
        for (auto& T : bundled_family(a.grid))
            if (T.label == a.kind) return T.mu;
        if (a.kind == "quartic") return quartic_gibbs(a.g, a.grid);
        if (a.kind == "free_poisson") return free_poisson(a.lambda, a.grid);
        throw DomainError("sample: unknown kind '" + a.kind + "'");
    }();
    Report r;
    if (a.moments > 0) {
        std::vector<double> m = mu.moments(a.moments);
        if (a.kind == "semicircle")
            for (int p = 1; p <= a.moments; ++p) m[p - 1] = semicircle_moment(p, a.var);
        r.json = {{"type", "moments"}, {"values", m}};
    } else {
        r.json = mu.to_json();
    }
    return r;
}

}  // namespace freestein::cli
