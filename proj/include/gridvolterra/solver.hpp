#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gridvolterra/features.hpp"

namespace gridvolterra {

/// Identity of one design column of a per-bus regression.
struct CoefId {
    enum class Kind { First, Pair };
    Kind kind = Kind::First;
    BusId i = 0;  ///< first-order bus, or smaller pair partner
    BusId j = 0;  ///< larger pair partner (Pair only)
};

/// Per-bus regression after structural elimination: the self column, every
/// pair containing the bus, every diagonal pair (i, i), and the substation
/// are removed from the design rather than constrained. y and the design
/// columns are mean-centered over time.
///
/// Groups follow the per-bus coefficient matrix rows: group for partner bus
/// i holds its first-order column plus every pair column containing i, so a
/// pair column belongs to two groups (the solver makes them disjoint by
/// duplicating pair columns internally).
struct BusProblem {
    BusId n = 0;
    Eigen::VectorXd y;           ///< length T, centered
    Eigen::MatrixXd A;           ///< T x d, centered columns
    double y_mean = 0.0;
    Eigen::VectorXd col_means;   ///< length d
    std::vector<CoefId> colmap;  ///< column -> coefficient identity
    std::vector<BusId> group_bus;          ///< partner bus per group
    std::vector<std::vector<int>> groups;  ///< overlapping column index lists
};

enum class StepPolicy { Fixed, Backtracking };

struct SolverConfig {
    double lambda = 0.0;  ///< elementwise l1 weight
    double mu = 0.0;      ///< row-group l2,1 weight
    double tol = 1e-8;    ///< relative-objective stopping threshold
    int max_iter = 20000;
    StepPolicy step = StepPolicy::Backtracking;
    bool sweep = false;            ///< geometric lambda grid with holdout validation
    double holdout_fraction = 0.2; ///< trailing fraction of T used for validation
    int sweep_lambda_points = 8;   ///< grid lambda = lambda_max * 10^{-k/2}, k = 1..points
    /// Group coupling during the sweep: mu = fraction * (largest group
    /// threshold at the current lambda). Tied to lambda instead of searched;
    /// holdout error is nearly flat in mu, so a search is noise-driven.
    double sweep_mu_fraction = 1e-3;
    /// Relative slack over the minimum pooled holdout error; the densest grid
    /// point inside the slack wins. Zero reduces to the plain argmin.
    double sweep_slack = 0.10;
    bool enforce_hierarchy = true; ///< post-hoc exact zeroing of pairs with a zero first-order partner
    int jobs = 1;
};

enum class SolveStatus { Converged, MaxIter };

struct BusSolution {
    Eigen::VectorXd theta;  ///< length d, duplicated pair copies summed
    /// Solution in the internal disjoint-group coordinates. The layout is the
    /// concatenation of problem.groups (one copy per membership), followed by
    /// one copy of every column that belongs to no group; summing the copies
    /// of a column gives theta. Kept so the optimality certificate can be
    /// recomputed externally.
    Eigen::VectorXd theta_split;
    std::vector<double> objective_trace;
    SolveStatus status = SolveStatus::Converged;
    int iterations = 0;
    double certificate = 0.0;  ///< subgradient optimality residual at theta_split
    double grad_norm = 0.0;    ///< ||grad f(theta_split)||_2
    double lambda = 0.0;       ///< regularization actually used (after sweep)
    double mu = 0.0;
    std::string warning;  ///< e.g. "ill-conditioned", empty if none
};

/// Aggregate output of the per-bus solves.
struct IdentifyResult {
    std::vector<VolterraKernels> kernels;  ///< one per bus, ordered 1..N
    StackedModel stacked;
    std::vector<BusSolution> solutions;  ///< per-bus diagnostics
    int hierarchy_zeroed = 0;            ///< pair coefficients zeroed by the hierarchy pass
};

/// Assemble bus n's regression from the feature matrix.
BusProblem build_problem(const VoltageSeries& series, const FeatureMatrix& features, BusId n);

/// Plain lasso zero threshold for a problem: 2 ||A^T y||_inf.
double lambda_max(const BusProblem& problem);

/// Proximal operator of l1 * ||.||_1 + l2 * sum_g ||.||_2 for DISJOINT
/// groups: elementwise soft-threshold by l1, then per-group block shrinkage
/// by factor max(0, 1 - l2 / ||.||_2). Coordinates outside every group only
/// get the soft-threshold.
Eigen::VectorXd prox_sparse_group(const Eigen::VectorXd& z, double l1, double l2,
                                  const std::vector<std::vector<int>>& groups);

/// Accelerated proximal gradient (monotone, with restart on objective
/// increase) on ||y - A theta||^2 + lambda ||theta||_1 + mu ||R_n^T||_{2,1}.
/// Overlapping groups are handled by duplicating pair columns so the prox is
/// exact; the returned theta sums the duplicates. Converged means the
/// subgradient optimality residual is <= 1e-6 * (1 + ||grad f||).
BusSolution solve_bus(const BusProblem& problem, const SolverConfig& cfg);

/// Recompute dist(-grad f, subdifferential of the penalty) at
/// solution.theta_split. Matches BusSolution::certificate up to roundoff.
double optimality_residual(const BusProblem& problem, const BusSolution& solution,
                           double lambda, double mu);

/// Solve every bus (independently, optionally in parallel), restore the
/// structural zeros, optionally enforce the first-order/pair hierarchy by
/// exact zeroing, and assemble the stacked model.
IdentifyResult solve_all(const VoltageSeries& series, const FeatureMatrix& features,
                         const SolverConfig& cfg);

}  // namespace gridvolterra
