#pragma once

#include <Eigen/Dense>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "gridvolterra/grid.hpp"
#include "gridvolterra/solver.hpp"

namespace gridvolterra {

/// Symmetric nonnegative bus-pair scores with a zero diagonal; entry
/// (i-1, j-1) scores the unordered pair {i, j} of non-substation buses.
struct EdgeScores {
    Eigen::MatrixXd S;
};

/// Scores for second-order triples (n, {i, j}) with i < j and n not a
/// partner. Keys absent from the map score zero.
struct TriadScores {
    int num_buses = 0;
    std::map<std::tuple<BusId, BusId, BusId>, double> score;
};

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

/// ROC curve over a finite candidate set: one point per distinct score value
/// (predict positive when score >= threshold) plus +/-inf endpoints. The
/// trapezoidal AUC is accumulated in integer counts, so it equals the
/// Mann-Whitney statistic of the scores exactly.
struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
    long long positives = 0;
    long long negatives = 0;
};

/// Edge score for {i, j} is the larger first-order magnitude across the two
/// per-bus regressions: max(|rho1 of j in bus i|, |rho1 of i in bus j|).
EdgeScores edge_scores_from_kernels(const std::vector<VolterraKernels>& kernels);

/// Triad score for (n, {i, j}) is |rho2 of (i, j) in bus n|; exact zeros are
/// left out of the map.
TriadScores triad_scores_from_kernels(const std::vector<VolterraKernels>& kernels);

/// ROC over all unordered pairs of buses 1..N. Truth edges touching the
/// substation are dropped (the estimator never sees bus 0); DegenerateTruth
/// if no positive or no negative candidate remains.
RocCurve roc_edges(const EdgeScores& scores, const std::set<std::pair<BusId, BusId>>& truth);

/// ROC over all (n, {i, j}) triples of buses 1..N, same substation handling.
RocCurve roc_triads(const TriadScores& scores,
                    const std::set<std::pair<BusId, std::pair<BusId, BusId>>>& truth);

/// |K_ij| / sqrt(K_ii K_jj) where K is the inverse sample covariance of the
/// series, ridge-stabilized (1e-8 * trace/N on the diagonal) when the
/// covariance is near singular. allow_ridge=false turns the stabilization
/// into a SingularCovariance error.
EdgeScores baseline_linear_pc(const VoltageSeries& series, bool allow_ridge = true);

/// |K_ij| for the same concentration matrix K.
EdgeScores baseline_concentration(const VoltageSeries& series, bool allow_ridge = true);

struct EvaluationReport {
    std::vector<std::string> methods;  ///< methods actually run, input order
    std::map<std::string, EdgeScores> edge_scores;
    std::map<std::string, RocCurve> edge_roc;
    TriadScores triads;
    RocCurve triad_roc;
    bool has_triads = false;  ///< false when the truth has no estimator-visible triad
    IdentifyResult identify;  ///< populated when "volterra" ran
};

/// Score the requested methods ("volterra", "pc", "concentration") against
/// the grid's ground truth on a simulated or measured series.
EvaluationReport evaluate(const RadialGrid& grid, const VoltageSeries& series,
                          const SolverConfig& cfg,
                          const std::vector<std::string>& methods = {"volterra", "pc",
                                                                     "concentration"});

}  // namespace gridvolterra
