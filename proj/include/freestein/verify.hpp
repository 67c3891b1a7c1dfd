#pragma once

// Exact (Rational) or floating-point identity suites over the algebraic modules, shared by the
// CLI's `verify` subcommands and the acceptance binary.

#include <cstdint>
#include <nlohmann/json.hpp>
#include <random>
#include <string>
#include <vector>

#include "freestein/chebwick.hpp"

namespace freestein {

struct SuiteCheck {
    std::string group;   // e.g. "orthonormality"
    std::string case_;   // e.g. "n=3 m=5"
    double defect = 0;   // max |lhs - rhs| over coefficients
    bool pass = true;
};

struct IdentityReport {
    std::string suite;
    std::string mode;     // "exact" | "float"
    double tol = 0;       // 0 in exact mode
    std::vector<SuiteCheck> checks;
    int failures() const;
    int count(const std::string& group) const;
    nlohmann::json to_json() const;  // failures listed individually, passes summarized per group
};

// Atomic law with `atoms` quarter-integer points in [-2, 2] and positive integer weights.
struct AtomicLaw {
    std::vector<Rational> moments;    // m_1..m_L
    std::vector<Rational> cumulants;  // kappa_1..kappa_L
};
AtomicLaw random_atomic_law(std::mt19937_64& rng, int atoms, int L);

// Sum of `terms` elementary one-letter tensors with leg degree <= max_deg, coefficients in [-3, 3].
TensorPoly<Rational> random_x_tensor(std::mt19937_64& rng, int order, int max_deg, int terms);

// Semicircular-state identities up to degree `deg`: Chebyshev orthonormality (n, m <= deg),
// Catalan moments, the Schwinger-Dyson ladder and higher conjugate variables (n, k <= min(deg, 6)),
// Schwinger-Dyson for the standard semicircular pair, and the difference-quotient rules
// (Leibniz, coassociativity, cyclic gradient) on seeded random two-variable polynomials.
template <class S>
IdentityReport identity_suite(int deg, std::uint64_t seed, double tol = 1e-9);

// Wick calculus over a seeded random rational x-law: isometry, chaos orthogonality, the
// Heisenberg relation, d^k d^{k,*} = id, centering, and the Chebyshev recursion.
template <class S>
IdentityReport divergence_suite(int kmax, int leg_deg, std::uint64_t seed, int reps = 2, double tol = 1e-9);

}  // namespace freestein
