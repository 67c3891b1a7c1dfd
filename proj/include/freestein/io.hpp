#pragma once

// JSON and text forms for polynomials.
//   {"n": int, "terms": [{"word": [1-based letters], "re": "3/4", "im": "0"}]}

#include <nlohmann/json.hpp>
#include <sstream>

#include "freestein/ncalg.hpp"

namespace freestein {

template <class S>
nlohmann::json poly_to_json(const NCPoly<S>& p) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [w, c] : p.terms()) {
        std::vector<int> letters;
        for (int l : w) letters.push_back(l + 1);
        terms.push_back({{"word", letters}, {"re", ScalarTraits<S>::str(c)}, {"im", "0"}});
    }
    return {{"n", p.n()}, {"terms", terms}};
}

// Coefficients must be real; a nonzero imaginary part is rejected.
template <class S>
NCPoly<S> poly_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("n") || !j.contains("terms"))
        throw ParseError("polynomial: expected object with fields 'n' and 'terms'");
    const int n = j.at("n").get<int>();
    NCPoly<S> p(n);
    std::size_t idx = 0;
    for (const auto& t : j.at("terms")) {
        if (!t.contains("word") || !t.contains("re"))
            throw ParseError("polynomial: term " + std::to_string(idx) + " lacks 'word' or 're'");
        Word w;
        for (int l : t.at("word").get<std::vector<int>>()) {
            if (l < 1 || l > n) throw ParseError("polynomial: term " + std::to_string(idx) + " letter out of range");
            w.push_back(l - 1);
        }
        const auto read = [&](const char* key) {
            const auto& v = t.at(key);
            return v.is_string() ? ScalarTraits<S>::parse(v.get<std::string>())
                                 : ScalarTraits<S>::parse(v.dump());
        };
        if (t.contains("im") && read("im") != S(0))
            throw ParseError("polynomial: term " + std::to_string(idx) + " has nonzero imaginary part");
        p.add_term(w, read("re"));
        ++idx;
    }
    return p;
}

// "2*x1*x2 - x1^2 + 3"; a single generator prints as "t".
template <class S>
std::string to_string(const NCPoly<S>& p) {
    if (p.is_zero()) return "0";
    std::ostringstream os;
    bool first = true;
    // Highest degree first reads more naturally.
    for (auto it = p.terms().rbegin(); it != p.terms().rend(); ++it) {
        const auto& [w, c] = *it;
        std::string cs = ScalarTraits<S>::str(c);
        bool neg = !cs.empty() && cs[0] == '-';
        if (neg) cs = cs.substr(1);
        os << (first ? (neg ? "-" : "") : (neg ? " - " : " + "));
        first = false;
        std::ostringstream mono;
        for (std::size_t i = 0; i < w.size();) {
            std::size_t j = i;
            while (j < w.size() && w[j] == w[i]) ++j;
            if (i > 0) mono << "*";
            mono << (p.n() == 1 ? std::string("t") : "x" + std::to_string(w[i] + 1));
            if (j - i > 1) mono << "^" << (j - i);
            i = j;
        }
        if (w.empty())
            os << cs;
        else if (cs == "1")
            os << mono.str();
        else
            os << cs << "*" << mono.str();
    }
    return os.str();
}

}  // namespace freestein
