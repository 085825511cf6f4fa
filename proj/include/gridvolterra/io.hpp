#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "gridvolterra/features.hpp"
#include "gridvolterra/grid.hpp"
#include "gridvolterra/identify.hpp"
#include "gridvolterra/powerflow.hpp"

namespace gridvolterra {

/// Render a double with 17 significant digits (lossless round trip).
std::string format_double(double v);

nlohmann::json grid_to_json(const RadialGrid& grid);
RadialGrid grid_from_json(const nlohmann::json& j);
void save_grid(const RadialGrid& grid, const std::string& path);
RadialGrid load_grid(const std::string& path);

/// CSV with header t,bus_1,...,bus_N; one row per time step.
void save_series(const VoltageSeries& series, const std::string& path);
VoltageSeries load_series(const std::string& path);

/// CSV with header t,p_1,...,p_N,q_1,...,q_N.
void save_profiles(const InjectionProfile& profile, const std::string& path);
InjectionProfile load_profiles(const std::string& path);

/// Kernels carry rho1 densely and rho2 as (i, j, value) triplets of the
/// nonzero entries, so structural zeros survive a round trip exactly.
nlohmann::json kernels_to_json(const std::vector<VolterraKernels>& kernels);
std::vector<VolterraKernels> kernels_from_json(const nlohmann::json& j);
void save_kernels(const std::vector<VolterraKernels>& kernels, const std::string& path);
std::vector<VolterraKernels> load_kernels(const std::string& path);

/// Per-bus solver diagnostics (status, iterations, certificate, chosen
/// regularization) for the sidecar written next to the kernels.
nlohmann::json diagnostics_to_json(const IdentifyResult& result);

/// CSV with header threshold,fpr,tpr (the +/-inf endpoints print as inf).
void save_roc_csv(const RocCurve& curve, const std::string& path);
/// CSV with header i,j,score; all pairs, descending score.
void save_edge_scores_csv(const EdgeScores& scores, const std::string& path);
/// CSV with header n,i,j,score; nonzero triads, descending score.
void save_triad_scores_csv(const TriadScores& scores, const std::string& path);

/// Write roc_<method>.csv, edges_<method>.csv, auc.json and, when the
/// volterra method ran, kernels.json, diagnostics.json and the triad files
/// into dir (created if absent).
void save_report(const EvaluationReport& report, const std::string& dir);

/// Machine-readable description of every file format plus the library
/// version, served by the schema subcommand.
nlohmann::json schema_json();

}  // namespace gridvolterra
