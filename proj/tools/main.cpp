// Command-line front end. Reports go to --out (JSON, or CSV when the path ends in .csv) or stdout.
// Exit status: 0 all checks within tolerance, 1 a check failed, 2 bad input or numerical failure.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "freestein/errors.hpp"

using namespace freestein::cli;

namespace {

std::string g_out;

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int emit(const Report& r, const std::string& cmd, double seconds) {
    const bool csv = ends_with(g_out, ".csv");
    if (csv && r.csv.empty()) throw freestein::ParseError(cmd + " has no CSV output; use a .json path");
    const std::string body = csv ? r.csv : r.json.dump(2) + "\n";
    if (g_out.empty()) {
        std::cout << body;
    } else {
        std::ofstream(g_out) << body;
        // wall-clock time stays out of the report so reports diff cleanly
        std::ofstream(g_out + ".log") << cmd << " " << seconds << " s, ok=" << r.ok << "\n";
    }
    if (!r.ok) std::cerr << cmd << ": checks failed\n";
    return r.ok ? 0 : 1;
}

template <class F>
int timed(const std::string& cmd, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    Report r = f();
    return emit(r, cmd, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Free Stein kernels, discrepancies and one-dimensional free-probability numerics"};
    app.require_subcommand(1);
    app.add_option("--out", g_out, "Report path (.json or .csv); stdout when omitted");

    VerifyArgs va;
    auto* verify = app.add_subcommand("verify", "Exact or floating-point identity suites");
    verify->require_subcommand(1);
    auto* vid = verify->add_subcommand("identities", "Chebyshev, Catalan, ladder and difference-quotient identities");
    auto* vdiv = verify->add_subcommand("divergence", "Wick calculus over a seeded random rational law");
    for (auto* sc : {vid, vdiv}) {
        sc->add_option("--mode", va.mode, "exact | float")->check(CLI::IsMember({"exact", "float"}));
        sc->add_option("--seed", va.seed, "Seed for the randomized cases");
        sc->add_option("--tol", va.tol, "Tolerance in float mode");
    }
    vid->add_option("--deg", va.deg, "Polynomial degree");
    vdiv->add_option("--deg", va.deg, "Leg degree")->default_val(3);
    vdiv->add_option("--k", va.k, "Highest divergence order");
    vdiv->add_option("--reps", va.reps, "Random tensors per order");

    SteinArgs sa;
    auto* st = app.add_subcommand("stein", "Assemble and solve the truncated Stein problem");
    st->add_option("--moments", sa.input, "Moment, cumulant, covariance or density file")->required();
    st->add_option("--k", sa.k);
    st->add_option("--d", sa.d);
    st->add_option("--D", sa.D);
    st->add_option("--rho", sa.rho);
    st->add_option("--tol", sa.tol, "Moment-match tolerance");

    PoincareArgs pa;
    auto* po = app.add_subcommand("poincare", "Generalized Poincare constant");
    po->add_option("--moments", pa.input)->required();
    po->add_option("--l", pa.l);
    po->add_option("--d", pa.d);

    MomentMapArgs ma;
    auto* mm = app.add_subcommand("moment-map", "Free moment map and its Stein kernel");
    mm->add_option("--measure", ma.input, "Density file")->required();
    mm->add_flag("--center", ma.center, "Shift a non-centered input");
    mm->add_option("--grid", ma.grid);
    mm->add_option("--tol", ma.tol, "Pushforward residual");
    mm->add_option("--damping", ma.damping);
    mm->add_option("--kernel-tol", ma.kernel_tol, "Accepted kernel Stein residual");

    EquilibriumArgs ea;
    auto* eq = app.add_subcommand("equilibrium", "Equilibrium measure of rho x^2/2 + g x^4");
    eq->add_option("--rho", ea.rho);
    eq->add_option("--quartic", ea.quartic);
    eq->add_option("--a", ea.a);
    eq->add_option("--b", ea.b);
    eq->add_option("--grid", ea.grid);
    eq->add_option("--tol", ea.tol);

    InequalityArgs ia;
    auto* in = app.add_subcommand("inequalities", "Fisher-flow, HSI, WS and W2 bounds");
    in->add_option("--measure", ia.input, "Density file; the bundled family when omitted");
    in->add_flag("--center", ia.center);
    in->add_option("--k", ia.k);
    in->add_option("--d", ia.d);
    in->add_option("--D", ia.D);
    in->add_option("--grid", ia.grid, "Bundled family resolution");
    in->add_option("--times", ia.times, "Flow times")->delimiter(',');
    in->add_option("--tol", ia.tol, "Relative margin tolerance");

    CltArgs ca;
    auto* clt = app.add_subcommand("clt", "Entropic CLT and discrepancy decay");
    clt->add_option("--base", ca.input, "Density file of the base law")->required();
    clt->add_flag("--center", ca.center, "Standardize the base law");
    clt->add_option("--k", ca.k);
    clt->add_option("--d", ca.d);
    clt->add_option("--D", ca.D);
    clt->add_option("--N", ca.Ns)->delimiter(',');
    clt->add_option("--grid", ca.grid);
    clt->add_option("--tol", ca.tol);

    SampleArgs xa;
    auto* smp = app.add_subcommand("sample", "Write a measure file for a built-in law");
    smp->add_option("--kind", xa.kind, "semicircle | symmetric_mixture | asymmetric_mixture | quartic_gibbs | quartic_gibbs_strong | quartic | free_poisson");
    smp->add_option("--lambda", xa.lambda, "Free Poisson rate (> 1)");
    smp->add_option("--var", xa.var);
    smp->add_option("--g", xa.g);
    smp->add_option("--grid", xa.grid);
    smp->add_option("--moments", xa.moments, "Write this many moments instead of the density");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;  // --help exits 0
    }

    try {
        if (*vid) return timed("verify identities", [&] { return verify_identities(va); });
        if (*vdiv) return timed("verify divergence", [&] { return verify_divergence(va); });
        if (*st) return timed("stein", [&] { return stein(sa); });
        if (*po) return timed("poincare", [&] { return poincare(pa); });
        if (*mm) return timed("moment-map", [&] { return moment_map_cmd(ma); });
        if (*eq) return timed("equilibrium", [&] { return equilibrium_cmd(ea); });
        if (*in) return timed("inequalities", [&] { return inequalities_cmd(ia); });
        if (*clt) return timed("clt", [&] { return clt_cmd(ca); });
        if (*smp) return timed("sample", [&] { return sample(xa); });
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
