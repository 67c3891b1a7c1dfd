#include "freestein/scalar.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

#include "freestein/errors.hpp"

namespace freestein {

namespace {

// Parses [sign]digits[.digits][e[sign]digits] exactly.
Rational parse_decimal(const std::string& s) {
    std::size_t i = 0;
    bool neg = false;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) neg = s[i++] == '-';
    boost::multiprecision::mpz_int num = 0;
    long long scale = 0;
    bool digits = false;
    for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i, digits = true) num = num * 10 + (s[i] - '0');
    if (i < s.size() && s[i] == '.') {
        for (++i; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i, digits = true) {
            num = num * 10 + (s[i] - '0');
            --scale;
        }
    }
    if (!digits) throw ParseError("not a number: '" + s + "'");
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < s.size() && (s[i] == '+' || s[i] == '-')) eneg = s[i++] == '-';
        long long e = 0;
        bool edig = false;
        for (; i < s.size() && std::isdigit(static_cast<unsigned char>(s[i])); ++i, edig = true) e = e * 10 + (s[i] - '0');
        if (!edig) throw ParseError("bad exponent: '" + s + "'");
        scale += eneg ? -e : e;
    }
    if (i != s.size()) throw ParseError("trailing characters in number: '" + s + "'");
    boost::multiprecision::mpz_int p10 = boost::multiprecision::pow(boost::multiprecision::mpz_int(10), static_cast<unsigned>(scale < 0 ? -scale : scale));
    Rational r = scale >= 0 ? Rational(num * p10) : Rational(num, p10);
    return neg ? Rational(-r) : r;
}

}  // namespace

double ScalarTraits<double>::parse(const std::string& s) {
    return ScalarTraits<Rational>::parse(s).convert_to<double>();
}

std::string ScalarTraits<double>::str(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Rational ScalarTraits<Rational>::parse(const std::string& s) {
    auto slash = s.find('/');
    if (slash == std::string::npos) return parse_decimal(s);
    Rational a = parse_decimal(s.substr(0, slash));
    Rational b = parse_decimal(s.substr(slash + 1));
    if (b == 0) throw ParseError("zero denominator: '" + s + "'");
    return a / b;
}

std::string ScalarTraits<Rational>::str(const Rational& x) { return x.str(); }

Rational rational_from_double(double x) {
    if (!std::isfinite(x)) throw DomainError("rational_from_double: non-finite value");
    int e = 0;
    double m = std::frexp(x, &e);
    // m * 2^53 is an exact integer.
    auto mant = static_cast<long long>(std::ldexp(m, 53));
    e -= 53;
    Rational r(mant);
    if (e > 0)
        r *= Rational(boost::multiprecision::pow(boost::multiprecision::mpz_int(2), static_cast<unsigned>(e)));
    else if (e < 0)
        r /= Rational(boost::multiprecision::pow(boost::multiprecision::mpz_int(2), static_cast<unsigned>(-e)));
    return r;
}

}  // namespace freestein
