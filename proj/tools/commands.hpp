#pragma once

// Subcommand bodies. Each returns a deterministic report (no timestamps) plus an optional CSV
// table; `ok` decides the exit status.

#include <cstdint>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "ingest.hpp"

namespace freestein::cli {

struct Report {
    nlohmann::json json;
    std::string csv;   // empty when the command has no tabular output
    bool ok = true;
};

struct VerifyArgs {
    std::string mode = "exact";
    int deg = 6;        // identities: polynomial degree; divergence: leg degree
    int k = 4;          // divergence: highest order
    int reps = 3;
    std::uint64_t seed = 20240601;
    double tol = 1e-8;
};
Report verify_identities(const VerifyArgs& a);
Report verify_divergence(const VerifyArgs& a);

struct SteinArgs {
    std::string input;
    int k = 2, d = 4, D = 6;
    double rho = 1;
    double tol = 1e-8;
};
Report stein(const SteinArgs& a);

struct PoincareArgs {
    std::string input;
    int l = 0, d = 6;
    double cutoff = 1e-12;
};
Report poincare(const PoincareArgs& a);

struct MomentMapArgs {
    std::string input;
    bool center = false;
    int grid = 6000;
    double tol = 1e-5;
    double damping = 0.5;
    double kernel_tol = 1e-3;
};
Report moment_map_cmd(const MomentMapArgs& a);

struct EquilibriumArgs {
    double rho = 1;
    double quartic = 0;    // u = rho x^2/2 + quartic x^4
    double a = -3, b = 3;
    int grid = 2000;
    double tol = 1e-3;     // Euler-Lagrange residual accepted
};
Report equilibrium_cmd(const EquilibriumArgs& a);

struct InequalityArgs {
    std::string input;     // empty: the bundled family
    bool center = false;
    int k = 2, d = 4, D = 6;
    int grid = 800;        // bundled family resolution
    std::vector<double> times{0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0};
    double tol = 1e-6;
};
Report inequalities_cmd(const InequalityArgs& a);

struct CltArgs {
    std::string input;
    bool center = false;
    int k = 2, d = 4, D = 6;
    std::vector<int> Ns{4, 8, 16, 32};
    int grid = 800;
    double tol = 1e-8;
};
Report clt_cmd(const CltArgs& a);

struct SampleArgs {
    std::string kind = "semicircle";   // semicircle, a bundled label, quartic or free_poisson
    double var = 1;
    double g = 0.1;
    double lambda = 4;                 // free Poisson rate
    int grid = 800;
    int moments = 0;                   // > 0: write the first `moments` moments instead of the density
};
Report sample(const SampleArgs& a);

// Shortest round-trip decimal form, shared by every CSV writer.
std::string fmt(double x);

}  // namespace freestein::cli
