#pragma once

// Input files for the command-line tool.
//   {"type":"density","support":[a,b],"grid_size":m,"density":[...]}
//   {"type":"moments","values":[m_1,...]}   {"type":"cumulants","values":[k_1,...]}
//   {"type":"covariance","matrix":[[...]]}

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "freestein/measures1d.hpp"
#include "freestein/tracestate.hpp"

namespace freestein::cli {

struct IngestOptions {
    bool require_centered = false;
    bool auto_center = false;   // shift a non-centered input instead of rejecting it
    double mass_tol = 1e-6;     // |raw mass - 1| for density files
    double center_tol = 1e-8;
    double match_tol = 1e-10;   // Catalan identification
};

struct Ingested {
    std::string kind;                    // density | moments | cumulants | covariance
    std::optional<GridMeasure> grid;     // density files
    std::vector<double> moments;         // 1D moment sequence (all 1D kinds)
    std::vector<std::vector<double>> covariance;
    double shift = 0;                    // applied by auto_center
    int semicircular_order = 0;          // moments agree with S(0,1) up to this order
    double hankel_min = 0;

    TraceState<double> trace() const;
    nlohmann::json summary() const;
};

Ingested ingest_measure(const nlohmann::json& j, const IngestOptions& opt = {});
Ingested ingest_measure_file(const std::string& path, const IngestOptions& opt = {});

// Moments of X - c from those of X.
std::vector<double> shift_moments(const std::vector<double>& m, double c);

}  // namespace freestein::cli
