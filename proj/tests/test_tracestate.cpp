#include <gtest/gtest.h>

#include <random>

#include "freestein/chebwick.hpp"
#include "freestein/tracestate.hpp"
#include "partition_oracle.hpp"

using namespace freestein;
using Q = Rational;
using QTrace = TraceState<Rational>;

namespace {

// Oracle: tau(w) = sum over NC partitions with monochromatic blocks of prod kappa_{|B|}(color).
Q oracle_free_trace(const Word& w, const std::vector<std::vector<Q>>& cum) {
    Q s(0);
    for (const auto& p : oracle::noncrossing_partitions(static_cast<int>(w.size()))) {
        Q prod(1);
        for (const auto& b : p) {
            int col = w[b[0]];
            bool mono = true;
            for (int i : b) mono = mono && w[i] == col;
            if (!mono) {
                prod = 0;
                break;
            }
            prod *= cum[col][b.size() - 1];
        }
        s += prod;
    }
    return s;
}

// Oracle: Wick formula over NC pair partitions.
Q oracle_wick(const Word& w, const std::vector<std::vector<Q>>& C) {
    Q s(0);
    for (const auto& p : oracle::noncrossing_partitions(static_cast<int>(w.size()))) {
        bool pairs = true;
        for (const auto& b : p) pairs = pairs && b.size() == 2;
        if (!pairs) continue;
        Q prod(1);
        for (const auto& b : p) prod *= C[w[b[0]]][w[b[1]]];
        s += prod;
    }
    return s;
}

std::vector<std::vector<Q>> identity(int n) {
    std::vector<std::vector<Q>> c(n, std::vector<Q>(n, Q(0)));
    for (int i = 0; i < n; ++i) c[i][i] = 1;
    return c;
}

Word random_word(std::mt19937& rng, int n, int len) {
    Word w(len);
    for (auto& l : w) l = static_cast<int>(rng() % n);
    return w;
}

// Two free Poisson laws: kappa_n = lambda * alpha^n (genuine probability laws).
std::vector<std::vector<Q>> poisson_family() {
    std::vector<std::vector<Q>> fam(2);
    Q a0(1, 2), a1(-1), p0(1), p1(1);
    for (int n = 1; n <= 8; ++n) {
        p0 *= a0;
        p1 *= a1;
        fam[0].push_back(Q(2) * p0);
        fam[1].push_back(Q(1, 3) * p1);
    }
    return fam;
}

}  // namespace

TEST(SemicircularTrace, FourthMomentIsCatalan) {
    EXPECT_EQ(semicircular_trace<Q>({0, 0, 0, 0}, identity(1)), Q(2));
}

TEST(SemicircularTrace, CrossingPairingVanishes) {
    EXPECT_EQ(oracle_wick({0, 1, 0, 1}, identity(2)), Q(0));
    EXPECT_EQ(semicircular_trace<Q>({0, 1, 0, 1}, identity(2)), Q(0));
}

TEST(SemicircularTrace, VarianceRhoInverse) {
    std::vector<std::vector<Q>> c{{Q(1, 3)}};
    EXPECT_EQ(semicircular_trace<Q>({0, 0}, c), Q(1, 3));
}

TEST(SemicircularTrace, MatchesWickOracleWithCorrelations) {
    std::vector<std::vector<Q>> C{{Q(2), Q(1, 2)}, {Q(1, 2), Q(1)}};
    auto tr = QTrace::semicircular(C);
    std::mt19937 rng(1);
    for (int rep = 0; rep < 60; ++rep) {
        Word w = random_word(rng, 2, 2 * (1 + rng() % 4));
        EXPECT_EQ(tr(w), oracle_wick(w, C));
    }
    EXPECT_EQ(tr(Word{0, 1, 0}), Q(0));
}

TEST(SemicircularTrace, RejectsNonPsdCovariance) {
    std::vector<std::vector<Q>> C{{Q(1), Q(2)}, {Q(2), Q(1)}};
    EXPECT_THROW(QTrace::semicircular(C), DomainError);
}

TEST(CumulantMoment, Examples) {
    auto k = cumulant_moment_transform<Q>({0, 1, 0, 2}, MomentCumulant::MomentsToCumulants);
    EXPECT_EQ(k, (std::vector<Q>{0, 1, 0, 0}));
    auto m = cumulant_moment_transform<Q>({0, 1, 0, 0, 0, 0}, MomentCumulant::CumulantsToMoments);
    EXPECT_EQ(m, (std::vector<Q>{0, 1, 0, 2, 0, 5}));
    auto z = cumulant_moment_transform<Q>({0, 0, 0, 0}, MomentCumulant::CumulantsToMoments);
    EXPECT_EQ(z, (std::vector<Q>{0, 0, 0, 0}));
}

TEST(CumulantMoment, AgreesWithPartitionOracle) {
    std::vector<Q> kap{Q(1, 2), Q(3), Q(-1, 3), Q(2), Q(5, 7), Q(-1), Q(1, 9), Q(4)};
    auto m = cumulant_moment_transform(kap, MomentCumulant::CumulantsToMoments);
    for (int n = 1; n <= 8; ++n) EXPECT_EQ(m[n - 1], oracle_free_trace(Word(n, 0), {kap})) << "n=" << n;
}

TEST(CumulantMoment, RoundTripLength12) {
    std::mt19937 rng(4);
    std::vector<Q> seq;
    for (int i = 0; i < 12; ++i) seq.push_back(Q(static_cast<int>(rng() % 11) - 5, 1 + static_cast<int>(rng() % 4)));
    auto k = cumulant_moment_transform(seq, MomentCumulant::MomentsToCumulants);
    EXPECT_EQ(cumulant_moment_transform(k, MomentCumulant::CumulantsToMoments), seq);
    auto m = cumulant_moment_transform(seq, MomentCumulant::CumulantsToMoments);
    EXPECT_EQ(cumulant_moment_transform(m, MomentCumulant::MomentsToCumulants), seq);
}

TEST(FreeFamilyTrace, Examples) {
    const Q a(3, 2), b(2);
    std::vector<std::vector<Q>> fam{{0, a, Q(1), Q(1)}, {0, b, 0, 0}};
    // x x s s -> a b
    EXPECT_EQ(oracle_free_trace({0, 0, 1, 1}, fam), a * b);
    EXPECT_EQ(free_family_trace<Q>({0, 0, 1, 1}, fam), a * b);
    // x s x s with both centered -> 0
    EXPECT_EQ(free_family_trace<Q>({0, 1, 0, 1}, fam), Q(0));
    EXPECT_EQ(free_family_trace<Q>({0}, fam), Q(0));
}

TEST(FreeFamilyTrace, MatchesPartitionOracleOnRandomWords) {
    auto fam = poisson_family();
    auto tr = QTrace::free_family(fam);
    std::mt19937 rng(8);
    for (int rep = 0; rep < 80; ++rep) {
        Word w = random_word(rng, 2, 1 + rng() % 8);
        EXPECT_EQ(tr(w), oracle_free_trace(w, fam));
    }
}

TEST(FreeFamilyTrace, TruncationError) {
    auto tr = QTrace::free_family({{Q(0), Q(1)}});
    EXPECT_THROW(tr(Word{0, 0, 0, 0}), TruncationError);
}

TEST(TraceState, WickAgreesWithCumulantsUpToDegree8) {
    auto wick = QTrace::standard_semicircular(2);
    auto cum = QTrace::free_family({semicircular_cumulants<Q>(Q(1), 8), semicircular_cumulants<Q>(Q(1), 8)});
    for (const Word& w : words_up_to(2, 8)) ASSERT_EQ(wick(w), cum(w));
}

TEST(TraceState, Traciality) {
    auto fam = poisson_family();
    fam.push_back(semicircular_cumulants<Q>(Q(1), 8));
    auto tr = QTrace::free_family(fam);
    std::mt19937 rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        Word u = random_word(rng, 3, rng() % 5), v = random_word(rng, 3, rng() % 4);
        EXPECT_EQ(tr(concat(u, v)), tr(concat(v, u)));
    }
}

TEST(TraceState, GramMatrixIsPositive) {
    auto check = [](const TraceState<double>& tr) {
        auto basis = words_up_to(tr.n(), 4);
        Eigen::MatrixXd G(basis.size(), basis.size());
        for (std::size_t i = 0; i < basis.size(); ++i)
            for (std::size_t j = 0; j < basis.size(); ++j) G(i, j) = tr(concat(basis[i], reversed(basis[j])));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10);
    };
    check(TraceState<double>::standard_semicircular(2));
    check(TraceState<double>::free_family({{0.0, 1.0, 0.5, 0.2, 0.0, 0.1, 0.0, 0.05}, {0, 1, 0, 0, 0, 0, 0, 0}}));
    // uniform law on [-sqrt3, sqrt3]
    std::vector<double> mu;
    for (int i = 1; i <= 8; ++i) mu.push_back(i % 2 ? 0.0 : std::pow(3.0, i / 2) / (i + 1));
    check(TraceState<double>::moment_table(mu));
}

TEST(TraceState, MomentTableHankelRejection) {
    // m2 = 1, m4 = 0.5 violates m4 >= m2^2: eigenvalue witness is negative.
    std::vector<double> bad{0, 1, 0, 0.5};
    double scale = 1;
    EXPECT_LT(hankel_min_eigenvalue(bad, &scale), -0.1);
    EXPECT_THROW(TraceState<double>::moment_table(bad), DomainError);
    EXPECT_NO_THROW(TraceState<double>::moment_table({0, 1, 0, 2, 0, 5}));
}

TEST(TraceState, MomentTableTruncation) {
    auto tr = TraceState<double>::moment_table({0, 1, 0, 2});
    EXPECT_EQ(tr(Word{0, 0, 0, 0}), 2.0);
    EXPECT_THROW(tr(Word(5, 0)), TruncationError);
}

TEST(TraceState, DefaultNormBound) {
    auto tr = TraceState<double>::moment_table({0, 1, 0, 2, 0, 5});
    EXPECT_DOUBLE_EQ(tr.norm_bound(0), std::max(1.0, std::pow(5.0, 1.0 / 6.0)));
    EXPECT_DOUBLE_EQ(TraceState<double>::standard_semicircular(1).norm_bound(0), 2.0);
}

TEST(Pairing, Examples) {
    auto tr = QTrace::standard_semicircular(1);
    auto one = TensorPoly<Q>::ones(1, 2);
    EXPECT_EQ(pairing(one, one, tr), Q(1));
    TensorPoly<Q> a(1, 2), b(1, 2);
    a.add_term({{0}, {}}, Q(1));
    b.add_term({{}, {0}}, Q(1));
    EXPECT_EQ(pairing(a, b, tr), Q(0));
    auto u2 = cheb_u<Q>(2);
    EXPECT_EQ(pairing(u2, u2, tr), Q(1));
}

TEST(Pairing, SymmetricAndPositive) {
    std::vector<double> mu{0.1, 1.2, 0.3, 2.5, 0.4, 7.0, 1.0, 25.0};
    auto tr = TraceState<double>::moment_table(mu);
    auto q = cumulant_moment_transform(mu, MomentCumulant::MomentsToCumulants);
    (void)q;
    TensorPoly<double> A(1, 2), B(1, 2);
    A.add_term({{0}, {0, 0}}, 1.5);
    A.add_term({{}, {0}}, -2.0);
    B.add_term({{0, 0}, {}}, 0.5);
    B.add_term({{0}, {0}}, 1.0);
    EXPECT_NEAR(pairing(A, B, tr), pairing(B, A, tr), 1e-12);
    EXPECT_GE(pairing(A, A, tr), 0.0);
}

TEST(Pairing, ShapeMismatch) {
    auto tr = QTrace::standard_semicircular(1);
    EXPECT_THROW(pairing(TensorPoly<Q>::ones(1, 2), TensorPoly<Q>::ones(1, 3), tr), DimensionError);
}

TEST(SchwingerDyson, SemicircleIsExact) {
    EXPECT_EQ(schwinger_dyson_residual(QTrace::standard_semicircular(1), 1.0, 6), 0.0);
    EXPECT_EQ(schwinger_dyson_residual(QTrace::standard_semicircular(2), 1.0, 4), 0.0);
}

TEST(SchwingerDyson, ScaledSemicircle) {
    auto tr = QTrace::standard_semicircular(2, Q(1, 4));
    EXPECT_EQ(schwinger_dyson_residual(tr, 4.0, 4), 0.0);
    EXPECT_GT(schwinger_dyson_residual(tr, 1.0, 4), 0.1);
}

TEST(SchwingerDyson, NonCenteredTableFailsAtConstantRow) {
    auto tr = TraceState<double>::moment_table({1.0, 2.0, 4.0, 9.0});
    EXPECT_GE(schwinger_dyson_residual(tr, 1.0, 0), 1.0);
}

TEST(Sobolev, Examples) {
    auto tr = QTrace::standard_semicircular(1);
    EXPECT_EQ(sobolev_seminorm<Q>({QPoly::constant(1, Q(3))}, 1, tr), 0.0);
    EXPECT_EQ(sobolev_seminorm<Q>({QPoly::constant(1, Q(3))}, 2, tr), 0.0);
    EXPECT_DOUBLE_EQ(sobolev_seminorm<Q>({QPoly::generator(1, 0)}, 1, tr), 1.0);
    // d^2(t^2) = (d (x) id)(1(x)t + t(x)1) = 1(x)1(x)1 once: C(2,2) = 1 leg pattern, so the seminorm is 1.
    EXPECT_DOUBLE_EQ(sobolev_seminorm<Q>({QPoly::monomial(1, {0, 0})}, 2, tr), 1.0);
    // d^2(t^3) has C(3,2) = 3 unit-coefficient terms whose pairwise pairings are tau(t)^2 = 0 or tau(t^2) = 1.
    EXPECT_DOUBLE_EQ(sobolev_seminorm<Q>({QPoly::monomial(1, {0, 0, 0})}, 2, tr), std::sqrt(3.0));
}
