#include "ingest.hpp"

#include <cmath>
#include <fstream>

#include "freestein/errors.hpp"

namespace freestein::cli {

namespace {

std::vector<double> numbers(const nlohmann::json& j, const char* field) {
    if (!j.contains(field) || !j.at(field).is_array())
        throw ParseError(std::string("measure file: field '") + field + "' must be an array");
    std::vector<double> v;
    std::size_t i = 0;
    for (const auto& x : j.at(field)) {
        if (!x.is_number())
            throw ParseError(std::string("measure file: ") + field + "[" + std::to_string(i) + "] is not a number");
        v.push_back(x.get<double>());
        ++i;
    }
    return v;
}

int catalan_order(const std::vector<double>& m, double tol) {
    int order = 0;
    for (std::size_t p = 1; p <= m.size(); ++p) {
        const double s = semicircle_moment(static_cast<int>(p));
        if (std::abs(m[p - 1] - s) > tol * std::max(1.0, std::abs(s))) break;
        order = static_cast<int>(p);
    }
    return order;
}

}  // namespace

std::vector<double> shift_moments(const std::vector<double>& m, double c) {
    // E(X - c)^p = sum_q binom(p, q) m_q (-c)^{p-q}
    std::vector<double> out;
    for (std::size_t p = 1; p <= m.size(); ++p) {
        double s = 0, binom = 1;
        for (std::size_t q = 0; q <= p; ++q) {
            const double mq = q == 0 ? 1.0 : m[q - 1];
            s += binom * mq * std::pow(-c, static_cast<double>(p - q));
            binom = binom * static_cast<double>(p - q) / static_cast<double>(q + 1);
        }
        out.push_back(s);
    }
    return out;
}

TraceState<double> Ingested::trace() const {
    if (kind == "covariance") return TraceState<double>::semicircular(covariance);
    return TraceState<double>::moment_table(moments);
}

nlohmann::json Ingested::summary() const {
    nlohmann::json j{{"kind", kind}, {"shift", shift}, {"semicircular_order", semicircular_order}};
    if (kind == "covariance") {
        j["n"] = covariance.size();
        return j;
    }
    j["hankel_min_eigenvalue"] = hankel_min;
    j["moments"] = std::vector<double>(moments.begin(), moments.begin() + std::min<std::size_t>(moments.size(), 8));
    if (grid) {
        j["support"] = {grid->a(), grid->b()};
        j["grid_size"] = grid->size();
        j["raw_mass"] = grid->raw_mass();
    }
    return j;
}

Ingested ingest_measure(const nlohmann::json& j, const IngestOptions& opt) {
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
        throw ParseError("measure file: expected an object with a string field 'type'");
    Ingested in;
    in.kind = j.at("type").get<std::string>();

    if (in.kind == "covariance") {
        if (!j.contains("matrix") || !j.at("matrix").is_array()) throw ParseError("covariance file: missing 'matrix'");
        std::size_t r = 0;
        for (const auto& row : j.at("matrix")) {
            if (!row.is_array()) throw ParseError("covariance file: matrix row " + std::to_string(r) + " is not an array");
            in.covariance.push_back(row.get<std::vector<double>>());
            ++r;
        }
        TraceState<double>::semicircular(in.covariance);  // validates shape and PSD
        return in;
    }

    if (in.kind == "density") {
        GridMeasure g = grid_measure_from_json(j, opt.mass_tol);
        const double mean = g.mean();
        if (std::abs(mean) > opt.center_tol && opt.require_centered) {
            if (!opt.auto_center)
                throw PreconditionError("density file: mean " + std::to_string(mean) +
                                        " is not 0 (pass --center to shift it)");
            g = g.translate(-mean);
            in.shift = -mean;
        }
        in.moments = g.moments(16);
        in.grid = std::move(g);
    } else if (in.kind == "moments" || in.kind == "cumulants") {
        auto v = numbers(j, "values");
        if (v.empty()) throw ParseError("measure file: 'values' is empty");
        if (in.kind == "cumulants") v = cumulant_moment_transform(v, MomentCumulant::CumulantsToMoments);
        if (std::abs(v[0]) > opt.center_tol && opt.require_centered) {
            if (!opt.auto_center)
                throw PreconditionError("moment file: m_1 = " + std::to_string(v[0]) +
                                        " is not 0 (pass --center to shift it)");
            in.shift = -v[0];
            v = shift_moments(v, v[0]);
        }
        in.moments = std::move(v);
    } else {
        throw ParseError("measure file: unknown type '" + in.kind + "'");
    }

    double scale = 1;
    in.hankel_min = hankel_min_eigenvalue(in.moments, &scale);
    if (in.hankel_min < -1e-10 * scale)
        throw DomainError("measure file: Hankel moment matrix is not positive semidefinite (min eigenvalue " +
                          std::to_string(in.hankel_min) + ")");
    in.semicircular_order = catalan_order(in.moments, opt.match_tol);
    return in;
}

Ingested ingest_measure_file(const std::string& path, const IngestOptions& opt) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return ingest_measure(j, opt);
}

}  // namespace freestein::cli
