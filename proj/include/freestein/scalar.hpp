#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <cmath>
#include <string>

namespace freestein {

using Rational = boost::multiprecision::mpq_rational;

// Per-scalar helpers so the algebra can run exactly (Rational) or in double.
template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static double to_double(double x) { return x; }
    static double abs(double x) { return std::fabs(x); }
    static double from_int(long long v) { return static_cast<double>(v); }
    static double parse(const std::string& s);
    static std::string str(double x);
    static constexpr bool exact = false;
};

template <>
struct ScalarTraits<Rational> {
    static double to_double(const Rational& x) { return x.convert_to<double>(); }
    static double abs(const Rational& x) { return to_double(x < 0 ? Rational(-x) : x); }
    static Rational from_int(long long v) { return Rational(v); }
    // Accepts "p/q", plain integers and finite decimals ("-0.125", "3e-2").
    static Rational parse(const std::string& s);
    static std::string str(const Rational& x);
    static constexpr bool exact = true;
};

template <class S>
double to_double(const S& x) {
    return ScalarTraits<S>::to_double(x);
}

// Exact conversion of a finite double to a rational.
Rational rational_from_double(double x);

}  // namespace freestein
