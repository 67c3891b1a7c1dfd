#include "freestein/steinsolve.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

namespace freestein {

namespace {

std::vector<std::vector<int>> all_tuples(int n, int len) {
    std::vector<std::vector<int>> out;
    std::vector<int> t(len, 0);
    while (true) {
        out.push_back(t);
        int r = len - 1;
        while (r >= 0 && t[r] == n - 1) t[r--] = 0;
        if (r < 0) break;
        ++t[r];
    }
    return out;
}

// All (legs)-tuples of words over n letters with total length <= D.
std::vector<std::vector<Word>> leg_tuples(int n, int legs, int D) {
    std::vector<std::vector<Word>> out;
    std::vector<Word> cur;
    std::function<void(int, int)> rec = [&](int leg, int left) {
        if (leg == legs) {
            out.push_back(cur);
            return;
        }
        for (const auto& w : words_up_to(n, left)) {
            cur.push_back(w);
            rec(leg + 1, left - static_cast<int>(w.size()));
            cur.pop_back();
        }
    };
    rec(0, D);
    return out;
}

// prod_l tau(u_l v_l*) for real generators
double leg_pairing(const std::vector<Word>& u, const std::vector<Word>& v, const TraceState<double>& tr) {
    double p = 1;
    for (std::size_t l = 0; l < u.size() && p != 0; ++l) p *= tr(concat(u[l], reversed(v[l])));
    return p;
}

double tensor_with_elementary(const std::vector<Word>& u, const TensorPoly<double>& T, const TraceState<double>& tr) {
    double s = 0;
    for (const auto& [key, c] : T.terms()) s += c * leg_pairing(u, key, tr);
    return s;
}

// Whitening of a PSD matrix: W with W^T G W = I on the retained range.
Eigen::MatrixXd whitening(const Eigen::MatrixXd& G, double cutoff, int* rank) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const auto& lam = es.eigenvalues();
    const double top = std::max(lam.cwiseAbs().maxCoeff(), 0.0);
    std::vector<int> keep;
    for (int i = 0; i < lam.size(); ++i)
        if (lam(i) > cutoff * top && lam(i) > 0) keep.push_back(i);
    Eigen::MatrixXd W(G.rows(), keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) W.col(c) = es.eigenvectors().col(keep[c]) / std::sqrt(lam(keep[c]));
    if (rank) *rank = static_cast<int>(keep.size());
    return W;
}

}  // namespace

int stein_required_degree(int k, int d, int D) {
    // b: d+1; M: block leg (<= D) against a derivative leg (<= d); G: two block legs (<= D each)
    (void)k;
    return std::max({d + 1, D + d, 2 * D, 1});
}

SteinSystem assemble(const TraceState<double>& tr, double rho, int k, int d, int D, const SteinOptions& opt) {
    if (k < 1) throw DimensionError("assemble: kernel order must be >= 1");
    if (d < 0 || D < 0) throw DimensionError("assemble: degrees must be non-negative");
    if (!(rho > 0)) throw DomainError("assemble: rho must be positive");
    const int need = stein_required_degree(k, d, D);
    if (tr.max_degree() < need)
        throw TruncationError("assemble: trace known to degree " + std::to_string(tr.max_degree()) + ", need " +
                              std::to_string(need));

    SteinSystem sys;
    sys.n = tr.n();
    sys.k = k;
    sys.d = d;
    sys.D = D;
    sys.rho = rho;
    const int n = sys.n;

    const auto block = leg_tuples(n, k + 1, D);
    const auto indices = all_tuples(n, k + 1);
    const int B = static_cast<int>(block.size());
    for (const auto& a : indices)
        for (const auto& u : block) sys.columns.push_back({a, u});
    for (int j = 0; j < n; ++j)
        for (const auto& w : words_up_to(n, d)) sys.rows.push_back({j, w});

    const int R = static_cast<int>(sys.rows.size()), C = static_cast<int>(sys.columns.size());
    sys.M = Eigen::MatrixXd::Zero(R, C);
    sys.b = Eigen::VectorXd::Zero(R);

    const auto dtuples = all_tuples(n, k);
    for (int r = 0; r < R; ++r) {
        const auto& [j, m] = sys.rows[r];
        auto mp = RPoly::monomial(n, m);
        double rhs = rho * tr(concat(reversed(m), Word{j}));
        if (!opt.raw_form) rhs -= tr(diff_quotient(mp, j));
        sys.b(r) = rhs;
        for (std::size_t t = 0; t < dtuples.size(); ++t) {
            auto T = diff_iterated(mp, dtuples[t]);
            if (T.terms().empty()) continue;
            // column block of alpha = (j, dtuples[t])
            const int blk = j * static_cast<int>(dtuples.size()) + static_cast<int>(t);
            for (int c = 0; c < B; ++c) sys.M(r, blk * B + c) = tensor_with_elementary(block[c], T, tr);
        }
    }

    Eigen::MatrixXd Gb(B, B);
    for (int a = 0; a < B; ++a)
        for (int c = a; c < B; ++c) Gb(a, c) = Gb(c, a) = leg_pairing(block[a], block[c], tr);
    sys.G = Eigen::MatrixXd::Zero(C, C);
    for (std::size_t i = 0; i < indices.size(); ++i) sys.G.block(i * B, i * B, B, B) = Gb;

    sys.center_index = indices;
    sys.C = Eigen::MatrixXd::Zero(indices.size(), C);
    for (std::size_t i = 0; i < indices.size(); ++i)
        for (int c = 0; c < B; ++c) {
            double p = 1;
            for (const auto& w : block[c]) p *= tr(w);
            sys.C(i, i * B + c) = p;
        }
    return sys;
}

KernelSolution solve_min_norm(const SteinSystem& sys, const SolverSettings& s) {
    KernelSolution sol;
    sol.k = sys.k;
    sol.d = sys.d;
    sol.D = sys.D;
    const int C = static_cast<int>(sys.columns.size());
    const int nblk = static_cast<int>(sys.center_index.size());
    const int B = nblk ? C / nblk : 0;

    // G is block diagonal with identical blocks: whiten one block.
    int rank_b = 0;
    Eigen::MatrixXd Wb = whitening(sys.G.topLeftCorner(B, B), s.gram_cutoff, &rank_b);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(C, rank_b * nblk);
    for (int i = 0; i < nblk; ++i) W.block(i * B, i * rank_b, B, rank_b) = Wb;
    sol.gram_rank = rank_b * nblk;

    Eigen::MatrixXd MW = sys.M * W;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(MW.cols());
    if (MW.size() > 0) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(MW, Eigen::ComputeThinU | Eigen::ComputeThinV);
        svd.setThreshold(s.rank_tol);
        sol.constraint_rank = static_cast<int>(svd.rank());
        y = svd.solve(sys.b);
    }
    sol.coefficients = W * y;
    sol.residual = (sys.M * sol.coefficients - sys.b).norm();
    sol.feasible = sol.residual <= s.feasibility * (sys.b.norm() + 1);
    if (sol.feasible) sol.discrepancy = y.norm();
    Eigen::VectorXd c = sys.C * sol.coefficients;
    sol.centering.assign(c.data(), c.data() + c.size());
    return sol;
}

TensorArray<double> KernelSolution::kernel(const SteinSystem& sys) const {
    TensorArray<double> A(sys.n, sys.k);
    for (std::size_t c = 0; c < sys.columns.size(); ++c) {
        if (coefficients(c) == 0) continue;
        TensorPoly<double> t(sys.n, sys.k + 1);
        t.add_term(sys.columns[c].legs, coefficients(c));
        A.add(sys.columns[c].index, t);
    }
    return A;
}

nlohmann::json to_json(const KernelSolution& sol) {
    nlohmann::json j;
    j["k"] = sol.k;
    j["d"] = sol.d;
    j["D"] = sol.D;
    j["feasible"] = sol.feasible;
    j["discrepancy"] = sol.feasible ? nlohmann::json(sol.discrepancy) : nlohmann::json(nullptr);
    j["residual"] = sol.residual;
    j["centering"] = sol.centering;
    return j;
}

// ---------------------------------------------------------------------------

MomentMatchReport moment_match_report(const TraceState<double>& tr, double rho, int k, double tol) {
    if (!(rho > 0)) throw DomainError("moment_match_report: rho must be positive");
    if (k < 1) throw DimensionError("moment_match_report: order must be >= 1");
    if (tr.max_degree() < k + 1) throw TruncationError("moment_match_report: trace too short");
    const int n = tr.n();
    auto ref = TraceState<double>::standard_semicircular(n, 1.0 / rho);
    MomentMatchReport rep;
    rep.k = k;
    rep.rho = rho;
    rep.matched_degree = k + 1;
    for (const auto& w : words_up_to(n, k + 1)) {
        if (w.empty()) continue;
        const double v = tr(w), s = ref(w);
        const double g = v - s;
        if (std::abs(g) > tol * std::max(1.0, std::abs(s))) {
            rep.gaps.push_back({w, v, s, g});
            rep.matched_degree = std::min(rep.matched_degree, static_cast<int>(w.size()) - 1);
        }
    }
    for (int j = 1; j <= k; ++j)
        if (rep.matched_degree >= j) rep.orders_may_exist.push_back(j);
    rep.centering_required = rep.matched_degree >= k + 1;
    return rep;
}

nlohmann::json MomentMatchReport::to_json() const {
    nlohmann::json j;
    j["k"] = k;
    j["rho"] = rho;
    j["matched_degree"] = matched_degree;
    j["orders_may_exist"] = orders_may_exist;
    j["centering_required"] = centering_required;
    auto arr = nlohmann::json::array();
    for (const auto& g : gaps) {
        std::vector<int> w1;
        for (int l : g.word) w1.push_back(l + 1);
        arr.push_back({{"word", w1}, {"value", g.value}, {"semicircle", g.semicircle}, {"gap", g.gap}});
    }
    j["gaps"] = arr;
    return j;
}

// ---------------------------------------------------------------------------

PoincareResult poincare_constant(const TraceState<double>& tr, int l, int d, double cutoff) {
    if (l < 0) throw DimensionError("poincare_constant: order must be >= 0");
    if (d < l + 1) throw DimensionError("poincare_constant: need d >= l + 1");
    if (tr.max_degree() < 2 * d) throw TruncationError("poincare_constant: trace too short");
    const int n = tr.n();
    PoincareResult res;
    for (const auto& w : words_up_to(n, d))
        if (static_cast<int>(w.size()) >= l + 1) res.basis.push_back(w);
    const int m = static_cast<int>(res.basis.size());

    // Higher gradients as lists over index tuples.
    auto grads = [&](const Word& w, int order) {
        std::vector<TensorPoly<double>> out;
        auto p = RPoly::monomial(n, w);
        if (order == 0) {
            out.push_back(TensorPoly<double>::from_poly(p));
            return out;
        }
        for (const auto& t : all_tuples(n, order)) out.push_back(diff_iterated(p, t));
        return out;
    };
    std::vector<std::vector<TensorPoly<double>>> T(m), U(m);
    for (int a = 0; a < m; ++a) {
        T[a] = grads(res.basis[a], l);
        U[a] = grads(res.basis[a], l + 1);
    }
    Eigen::MatrixXd N(m, m), Q(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = a; b < m; ++b) {
            double nn = 0, qq = 0;
            for (std::size_t t = 0; t < T[a].size(); ++t)
                nn += pairing(T[a][t], T[b][t], tr) - tr(T[a][t]) * tr(T[b][t]);
            for (std::size_t t = 0; t < U[a].size(); ++t) qq += pairing(U[a][t], U[b][t], tr);
            N(a, b) = N(b, a) = nn;
            Q(a, b) = Q(b, a) = (l + 1) * qq;
        }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q);
    const auto& lam = es.eigenvalues();
    const double top = lam.cwiseAbs().maxCoeff();
    std::vector<int> keep, null;
    for (int i = 0; i < m; ++i) (lam(i) > cutoff * top ? keep : null).push_back(i);
    if (!null.empty()) {
        Eigen::MatrixXd Z(m, null.size());
        for (std::size_t c = 0; c < null.size(); ++c) Z.col(c) = es.eigenvectors().col(null[c]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> zs(Z.transpose() * N * Z);
        if (zs.eigenvalues().maxCoeff() > cutoff * std::max(1.0, N.norm())) {
            res.constant = std::numeric_limits<double>::infinity();
            res.direction = Z * zs.eigenvectors().col(zs.eigenvalues().size() - 1);
            return res;
        }
    }
    Eigen::MatrixXd W(m, keep.size());
    for (std::size_t c = 0; c < keep.size(); ++c) W.col(c) = es.eigenvectors().col(keep[c]) / std::sqrt(lam(keep[c]));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> gs(W.transpose() * N * W);
    const int last = static_cast<int>(gs.eigenvalues().size()) - 1;
    res.constant = std::max(0.0, gs.eigenvalues()(last));
    res.direction = W * gs.eigenvectors().col(last);
    return res;
}

// ---------------------------------------------------------------------------

std::vector<double> scaled_cumulants(const std::vector<double>& base, const std::vector<double>& a) {
    std::vector<double> out(base.size(), 0.0);
    for (std::size_t m = 0; m < base.size(); ++m) {
        double s = 0;
        for (double aj : a) s += std::pow(aj, static_cast<double>(m + 1));
        out[m] = s * base[m];
    }
    return out;
}

std::vector<double> uniform_weights(int N) {
    if (N < 1) throw DimensionError("uniform_weights: N must be >= 1");
    return std::vector<double>(N, 1.0 / std::sqrt(static_cast<double>(N)));
}

CltScan clt_discrepancy_scan(const std::vector<double>& base, const std::vector<std::vector<double>>& weights, int k,
                             int d, int D, const SolverSettings& s) {
    if (base.size() < 2 || std::abs(base[0]) > 1e-12 || std::abs(base[1] - 1) > 1e-12)
        throw PreconditionError("clt_discrepancy_scan: base law must be centered with unit variance");
    CltScan scan;
    scan.k = k;
    scan.d = d;
    scan.D = D;
    auto solve_for = [&](const std::vector<double>& cum) {
        auto tr = TraceState<double>::free_family({cum});
        return solve_min_norm(assemble(tr, 1.0, k, d, D), s);
    };
    auto base_sol = solve_for(base);
    scan.base_feasible = base_sol.feasible;
    scan.base_sq_discrepancy = base_sol.feasible ? base_sol.discrepancy * base_sol.discrepancy : NAN;
    for (const auto& a : weights) {
        if (a.empty()) throw DomainError("clt_discrepancy_scan: empty weight vector");
        double n2 = 0;
        for (double x : a) n2 += x * x;
        if (std::abs(n2 - 1) > 1e-12) throw DomainError("clt_discrepancy_scan: weights must satisfy sum a_j^2 = 1");
        CltRow row;
        row.N = static_cast<int>(a.size());
        for (double x : a) row.sigma += std::pow(x, 2.0 * (k + 1));
        auto sol = solve_for(scaled_cumulants(base, a));
        row.feasible = sol.feasible;
        row.residual = sol.residual;
        row.sq_discrepancy = sol.feasible ? sol.discrepancy * sol.discrepancy : NAN;
        row.bound = row.sigma * scan.base_sq_discrepancy;
        row.ratio = row.bound > 0 ? row.sq_discrepancy / row.bound : NAN;
        scan.rows.push_back(row);
    }
    return scan;
}

}  // namespace freestein
