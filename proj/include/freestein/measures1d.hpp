#pragma once

// One-dimensional measures on uniform grids and the free-probability numerics built on them.
//
// Density model: on each cell the density is q = sqrt(g), g the quadratic through the nodal
// values f_i^2 whose curvature is the average nodal second difference of f^2. Square-root edges
// (semicircle-type laws, f^2 locally quadratic) are reproduced exactly; smooth laws to O(h^3).

#include <Eigen/Dense>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace freestein {

// Quadrature rule: sum_k w_k g(s_k) approximates the integral of g against a measure.
struct Quadrature {
    std::vector<double> s, w;
    double integrate(const std::function<double(double)>& g) const;
};

class GridMeasure {
public:
    // Nodes x_i = a + i h, i < m. Rejects negative or non-finite densities and a raw mass
    // further than mass_tol from 1; the stored density is renormalized to mass exactly 1.
    GridMeasure(double a, double b, std::vector<double> density, double mass_tol = 1e-3);

    static GridMeasure from_function(double a, double b, int m, const std::function<double(double)>& f,
                                     double mass_tol = 1e-3);

    double a() const { return a_; }
    double b() const { return b_; }
    double h() const { return h_; }
    int size() const { return static_cast<int>(f_.size()); }
    double node(int i) const { return a_ + h_ * i; }
    std::vector<double> nodes() const;
    const std::vector<double>& density() const { return f_; }
    double raw_mass() const { return raw_mass_; }

    double density_at(double x) const;
    double cdf(double x) const;
    double quantile(double p) const;
    // Cumulative mass at each node.
    const std::vector<double>& cumulative() const { return cum_; }

    // Density-weighted quadrature (8 Gauss points per cell, edge-aware).
    const Quadrature& quadrature() const { return quad_; }
    double integrate(const std::function<double(double)>& g) const { return quad_.integrate(g); }
    // Weights W_i with sum_i W_i g_i = integral of the linear interpolant of nodal values g_i.
    const std::vector<double>& node_weights() const { return nodew_; }
    // quadrature() nodes of cell j occupy [cell_offsets()[j], cell_offsets()[j + 1]).
    const std::vector<std::size_t>& cell_offsets() const { return celloff_; }
    // Appends density-weighted nodes for the part [lo, hi] (fractions of the cell) of cell j.
    void cell_quadrature(int j, double lo, double hi, std::vector<double>& x, std::vector<double>& w) const;

    double moment(int p) const;
    std::vector<double> moments(int L) const;  // m_1..m_L
    double mean() const { return moment(1); }
    double variance() const;

    GridMeasure dilate(double lambda) const;  // law of lambda X, lambda > 0
    GridMeasure translate(double c) const;

    nlohmann::json to_json() const;

private:
    double a_, b_, h_, raw_mass_ = 1;
    std::vector<double> f_, kappa_, cum_, nodew_;
    std::vector<std::size_t> celloff_;
    Quadrature quad_;
    void build();
};

// Parses {"type":"density","support":[a,b],"grid_size":m,"density":[...]}.
GridMeasure grid_measure_from_json(const nlohmann::json& j, double mass_tol = 1e-3);

// S(0, var) on m nodes spanning exactly [-2 sigma, 2 sigma].
GridMeasure semicircle(double var, int m = 2000);
// Exact Catalan-scaled moment C_{p/2} var^{p/2} (0 for odd p).
double semicircle_moment(int p, double var = 1);

// Mixture of semicircles sum_i w_i S(c_i, r_i^2), resampled on one grid covering all supports.
GridMeasure semicircle_mixture(const std::vector<double>& weights, const std::vector<double>& centers,
                               const std::vector<double>& variances, int m = 2000);

// Closed-form free Gibbs law for V = x^2/2 + g x^4 (g >= 0) on its exact support.
GridMeasure quartic_gibbs(double g, int m = 2000);

// Standardized free Poisson law (P - lambda) / sqrt(lambda), rate lambda > 1 (bounded density);
// free cumulants kappa_p = lambda^{1 - p/2} for p >= 2.
GridMeasure free_poisson(double lambda, int m = 2000);

// ---------------------------------------------------------------------------
// Logarithmic energy, entropy, conjugate variable, Fisher information, W2.

// Integral of log|x - s| against the piecewise-linear interpolant of nodal values f.
double log_potential_pl(const std::vector<double>& x, const std::vector<double>& f, double y);

double log_energy(const GridMeasure& mu);  // double integral of log|s - t|
double free_entropy(const GridMeasure& mu);  // log energy + 3/4 + log(2 pi)/2
double relative_entropy(const GridMeasure& mu, double rho);  // rho m2 / 2 - chi

struct ConjugateVariable {
    std::vector<double> x, xi;  // at the grid nodes
    bool edge_warning = false;  // density does not vanish at the window edges
};
// xi(x) = 2 p.v. integral of dmu(y)/(x - y).
double hilbert_pl(const std::vector<double>& x, const std::vector<double>& f, double y);
ConjugateVariable conjugate_variable(const GridMeasure& mu);
double fisher(const GridMeasure& mu);
double relative_fisher(const GridMeasure& mu, double rho);

double w2(const GridMeasure& mu, const GridMeasure& nu);

// ---------------------------------------------------------------------------
// Equilibrium (free Gibbs) measures.

struct EquilibriumSettings {
    int max_iter = 200000;
    double tol = 1e-6;     // stop when the discrete Euler-Lagrange residual falls below this
    double cutoff = 1e-6;  // support = nodes with weight > cutoff * max weight
};

struct EquilibriumResult {
    GridMeasure measure;
    double el_residual = 0;   // sup over support of |2 U - u - lambda|
    double lambda = 0;
    int iterations = 0;
    bool touches_window = false;
};

// Minimizer of -double integral log|t - s| + integral u over probability measures on [a, b],
// discretized by hat functions on m nodes. Throws DomainError if u is not convex on the grid,
// ConvergenceError if the budget runs out.
EquilibriumResult equilibrium_measure(const std::function<double(double)>& u, double a, double b, int m = 2000,
                                      const EquilibriumSettings& s = {});

// ---------------------------------------------------------------------------
// Free moment maps and their Stein kernels.

struct MomentMap1D {
    std::vector<double> x, du;  // u' samples, nondecreasing, linearly interpolated and extrapolated
    std::optional<GridMeasure> gibbs;  // nu_u
    double residual = 0;               // w2((u')_# nu_u, mu)
    std::vector<double> history;
    int iterations = 0;

    double derivative(double t) const;         // u'(t)
    double potential(double t) const;          // u(t), u(0) = 0
    double inverse_derivative(double y) const; // (u*)'(y) = (u')^{-1}(y)
    double second_derivative(double t) const;  // u''(t) by symmetric differences
};

struct MomentMapSettings {
    double damping = 0.5;
    double tol = 1e-5;   // w2 pushforward residual; the kernel's Stein defect is ~50x this
    int max_iter = 200;
    int grid = 6000;     // kernel defect is first order in the grid step
    EquilibriumSettings eq{};
};

MomentMap1D moment_map(const GridMeasure& mu, const MomentMapSettings& s = {});

// Pushforward of nu by a strictly increasing map T with derivative dT, resampled on m nodes.
GridMeasure pushforward(const GridMeasure& nu, const std::function<double(double)>& T,
                        const std::function<double(double)>& dT, int m = 0);

struct Kernel2D {
    GridMeasure mu;
    Eigen::MatrixXd A;  // A(x_i, x_j) on the node grid of mu
};

// Weak-form Stein defect sup_{p <= 6} |int V'(x) x^p dmu - double int A(x,y) D(x^p) dmu dmu|.
double stein_residual(const Kernel2D& K, const std::function<double(double)>& Vprime);
// Same defect with V' = identity.
double generator_residual(const GridMeasure& mu, const Eigen::MatrixXd& A);

struct MomentKernel {
    Kernel2D kernel;
    double stein_residual = 0;
    double sq_distance_to_one = 0;  // double int (A - 1)^2 dmu dmu
    double gibbs_bound = 0;         // double int [(u'(x) - u'(y))/(x - y) - 1]^2 dnu_u dnu_u
};

MomentKernel kernel_from_moment_map(const MomentMap1D& u, const GridMeasure& mu);

struct GeneralKernel {
    Kernel2D kernel;
    MomentMap1D map;  // moment map of (V')_# mu
    double stein_residual = 0;
};

GeneralKernel kernel_general_potential(const GridMeasure& mu, const std::function<double(double)>& Vprime,
                                       const std::function<double(double)>& Vsecond,
                                       const MomentMapSettings& s = {});

// ---------------------------------------------------------------------------
// Free convolution.

// Law of e^{-t} X + sqrt((1 - e^{-2t})/rho) S with S standard semicircular free from X.
GridMeasure ou_flow(const GridMeasure& mu, double t, double rho = 1, int m = 0);
// Relative Fisher information int (xi - rho x)^2 along the same flow (t > 0).
double ou_flow_fisher(const GridMeasure& mu, double t, double rho = 1);
// Law of N^{-1/2}(x_1 + ... + x_N) for free copies of mu.
GridMeasure free_clt_power(const GridMeasure& mu, int N, int m = 0);

// ---------------------------------------------------------------------------
// Inequality suite and entropic CLT.

struct InequalityCheck {
    std::string name;
    double t = 0;  // time for flow checks, else 0
    double lhs = 0, rhs = 0;
    double margin = 0;  // rhs - lhs
    bool pass = true;
    std::string notice;  // why a check was skipped
};

struct SuiteSettings {
    int k = 2, d = 4, D = 6;
    std::vector<double> times{0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0};
    double rel_tol = 1e-6;
    int debruijn_nodes = 48;
};

struct SuiteReport {
    std::string label;
    std::vector<double> sigma;  // Sigma_1..Sigma_k (NaN when infeasible)
    double fisher = 0;          // Phi*(mu | V_1)
    double entropy_gap = 0;     // direct: chi*(mu|V_1) - chi*(S|V_1)
    double debruijn_gap = 0;    // integral of Phi*(mu(t)|V_1) dt
    double w2_to_semicircle = 0;
    double w2_flow_bound = 0;   // integral of Phi*(mu(t)|V_1)^{1/2} dt
    std::vector<InequalityCheck> checks;
    bool all_pass() const;
    nlohmann::json to_json() const;
};

SuiteReport inequality_suite(const GridMeasure& mu, const SuiteSettings& s = {}, const std::string& label = "");

struct TestMeasure {
    std::string label;
    GridMeasure mu;
    int max_order;  // highest k with moments matching the semicircle to order k
};
// Centered, unit-variance smooth laws: semicircle, symmetric and asymmetric semicircle mixtures,
// rescaled quartic free Gibbs laws (weak and strong coupling).
std::vector<TestMeasure> bundled_family(int m = 800);

struct CltEntry {
    int N = 0;
    bool available = true;
    double entropy_gap = 0;
    double sigma = 0;  // N^{-k}
    double bound = 0;  // sigma^{1/k} Phi*(X|V_1)^{(k-1)/k}
};

struct CltTable {
    int k = 2;
    double base_fisher = 0;
    std::vector<CltEntry> rows;
    double decay_exponent = 0;  // least-squares slope of log gap against log N
    bool gap_nonincreasing = true;
    nlohmann::json to_json() const;
};

CltTable entropic_clt_table(const GridMeasure& base, int k, const std::vector<int>& Ns, int m = 0);

// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace freestein
