#pragma once

// Truncated higher-order free Stein kernels as minimum-norm constrained least squares.
//
// Unknown: A_k, an array of (k+1)-tensors indexed by (j, i_1..i_k), expanded in
// elementary tensors of monomials with total degree <= D. Constraints: for every
// test monomial m in component j with deg m <= d,
//     rho tau(m* x_j) - (tau(x)tau)(d_j m) = <A_k, J^k(m e_j)>.

#include <Eigen/Dense>
#include <limits>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "freestein/tracestate.hpp"

namespace freestein {

struct KernelColumn {
    std::vector<int> index;  // (j, i_1..i_k)
    std::vector<Word> legs;  // k+1 monomials
};

struct SteinRow {
    int component;
    Word monomial;
};

struct SteinSystem {
    int n = 1, k = 1, d = 0, D = 0;
    double rho = 1;
    std::vector<SteinRow> rows;
    std::vector<KernelColumn> columns;
    Eigen::MatrixXd M;  // rows x columns
    Eigen::VectorXd b;
    Eigen::MatrixXd G;  // Gram of the kernel basis under tau^{(k+1)}
    // Centering: tau^{(k+1)} of each array entry as a linear map of the coefficients.
    std::vector<std::vector<int>> center_index;
    Eigen::MatrixXd C;
};

struct SteinOptions {
    // Drop the (tau(x)tau) Tr((JP)*) term: solves for the uncentered kernel with A_1 = A~_1 - 1(x)1 I.
    bool raw_form = false;
};

struct KernelSolution {
    int k = 1, d = 0, D = 0;
    Eigen::VectorXd coefficients;
    bool feasible = false;
    double discrepancy = std::numeric_limits<double>::quiet_NaN();  // only when feasible
    double residual = 0;
    std::vector<double> centering;
    int gram_rank = 0;
    int constraint_rank = 0;

    // The solved kernel as a tensor array.
    TensorArray<double> kernel(const SteinSystem& sys) const;
};

struct SolverSettings {
    double gram_cutoff = 1e-10;   // relative eigenvalue cutoff for the G-pseudoinverse
    double rank_tol = 1e-10;      // relative singular-value threshold for the constraint solve
    double feasibility = 1e-8;    // ||MA - b|| <= feasibility * (||b|| + 1)
};

// Highest word length the assembly needs from the trace.
int stein_required_degree(int k, int d, int D);

SteinSystem assemble(const TraceState<double>& tr, double rho, int k, int d, int D, const SteinOptions& opt = {});

KernelSolution solve_min_norm(const SteinSystem& sys, const SolverSettings& s = {});

// {"k","d","D","feasible","discrepancy","residual","centering"}; discrepancy is null when infeasible.
nlohmann::json to_json(const KernelSolution& sol);

// ---------------------------------------------------------------------------

struct MomentGap {
    Word word;
    double value;
    double semicircle;
    double gap;
};

struct MomentMatchReport {
    int k = 1;
    double rho = 1;
    std::vector<MomentGap> gaps;           // every word of degree <= k+1 with a nonzero gap
    int matched_degree = 0;                // all words of degree <= this match
    std::vector<int> orders_may_exist;     // j in 1..k+1 with moments <= j matching
    bool centering_required = false;       // moments match to k+1
    nlohmann::json to_json() const;
};

// Compares every word of degree <= k+1 against S(0, 1/rho) semicirculars.
MomentMatchReport moment_match_report(const TraceState<double>& tr, double rho, int k, double tol = 1e-12);

// ---------------------------------------------------------------------------

struct PoincareResult {
    double constant = 0;             // +inf when the denominator Gram is degenerate on a numerator direction
    Eigen::VectorXd direction;       // maximizer (or null direction) in the monomial basis below
    std::vector<Word> basis;
};

// Best C with ||d^l p - tau(d^l p)||^2 <= C (l+1) sum ||d^{l+1} p||^2 over p of degree <= d.
PoincareResult poincare_constant(const TraceState<double>& tr, int l, int d, double cutoff = 1e-12);

// ---------------------------------------------------------------------------

struct CltRow {
    int N = 0;
    double sigma = 0;          // sum_j a_j^{2(k+1)}
    double sq_discrepancy = 0; // Sigma_k(Y_N)^2
    double bound = 0;          // sigma * Sigma_k(X)^2
    double ratio = 0;
    bool feasible = false;
    double residual = 0;
};

struct CltScan {
    int k = 1, d = 0, D = 0;
    double base_sq_discrepancy = 0;
    bool base_feasible = false;
    std::vector<CltRow> rows;
};

// Free cumulants of sum_j a_j x_j with x_j free copies of the base law.
std::vector<double> scaled_cumulants(const std::vector<double>& base, const std::vector<double>& a);

// Uniform weights a_j = N^{-1/2}.
std::vector<double> uniform_weights(int N);

CltScan clt_discrepancy_scan(const std::vector<double>& base_cumulants, const std::vector<std::vector<double>>& weights,
                             int k, int d, int D, const SolverSettings& s = {});

}  // namespace freestein
