#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "gridvolterra/errors.hpp"

namespace gridvolterra {

/// Bus index. 0 is always the root (substation); non-root buses are 1..N.
using BusId = std::int32_t;

/// One distribution line, identified by its child bus. Impedance z = r + jx
/// in per-unit; r must be strictly positive (zero-impedance lines are
/// rejected at build time).
struct Line {
    BusId child = 0;
    BusId parent = 0;
    double r = 0.0;  ///< per-unit resistance, > 0
    double x = 0.0;  ///< per-unit reactance, >= 0
};

/// A radial (tree) distribution grid with N non-root buses. Lines are stored
/// by child bus: line(n) connects bus n to its unique parent. Immutable after
/// construction; safe to share across threads.
class RadialGrid {
  public:
    /// Number of non-root buses (== number of lines).
    [[nodiscard]] int num_buses() const { return static_cast<int>(lines_.size()); }

    /// Line whose child end is bus n (n in 1..N).
    [[nodiscard]] const Line& line(BusId n) const { return lines_.at(static_cast<std::size_t>(n - 1)); }

    [[nodiscard]] BusId parent(BusId n) const { return line(n).parent; }

    /// Children of bus j (j in 0..N).
    [[nodiscard]] const std::vector<BusId>& children(BusId j) const {
        return children_.at(static_cast<std::size_t>(j));
    }

    /// Non-root buses ordered so that every parent precedes its children.
    [[nodiscard]] const std::vector<BusId>& topological_order() const { return topo_; }

    [[nodiscard]] const std::vector<Line>& lines() const { return lines_; }

    /// Per-line resistances / reactances indexed by child bus (slot n-1).
    [[nodiscard]] Eigen::VectorXd resistances() const;
    [[nodiscard]] Eigen::VectorXd reactances() const;

    friend RadialGrid build_grid(const std::vector<Line>& lines);

  private:
    RadialGrid() = default;
    std::vector<Line> lines_;                  // index n-1 holds line of child bus n
    std::vector<std::vector<BusId>> children_; // index j holds C_j, sorted
    std::vector<BusId> topo_;                  // parents before children
};

/// Incidence decomposition of a radial grid: B = [b0  Btilde], rows indexed
/// by line (= child bus), columns by bus. Sign convention: B[i,i] = +1,
/// B[i, parent(i)] = -1, which makes Btilde unit lower triangular under a
/// topological ordering and gives Btilde^{-1} b0 = -1_N.
struct IncidenceDecomposition {
    Eigen::MatrixXd B;       ///< N x (N+1)
    Eigen::VectorXd b0;      ///< first column of B
    Eigen::MatrixXd Btilde;  ///< N x N reduced incidence matrix
    std::map<BusId, std::set<BusId>> children;  ///< C_j for every bus j in 0..N
};

/// Ground-truth interaction sets: edges are the parent-child pairs; triads
/// are, per center bus n, all unordered pairs drawn from {parent(n)} union
/// children(n).
struct GroundTruth {
    /// Unordered bus pairs (i < j), one per line.
    std::set<std::pair<BusId, BusId>> edges;
    /// (center, {i, j}) with i < j; the pair never contains the center.
    std::set<std::pair<BusId, std::pair<BusId, BusId>>> triads;
};

/// Validate a line list and build the grid. Every child index in 1..N must
/// appear exactly once and the parent map must form a tree rooted at bus 0.
/// Throws CycleDetected, DisconnectedBus, DuplicateChild, BadIndex,
/// ZeroImpedance.
RadialGrid build_grid(const std::vector<Line>& lines);

/// Bus-branch incidence matrix of a validated grid.
IncidenceDecomposition incidence(const RadialGrid& grid);

/// Voltage sensitivity matrices of the linearized flow model:
/// R = Btilde^{-1} diag(r) Btilde^{-T}, X = Btilde^{-1} diag(x) Btilde^{-T}.
/// Equivalently, entry (i,j) is the summed r (resp. x) over the common root
/// path of buses i and j.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sensitivity_matrices(const RadialGrid& grid);

/// Edge and triad ground truth for evaluation.
GroundTruth ground_truth_sets(const RadialGrid& grid);

/// Random radial feeder: parents sampled sequentially among existing buses
/// with attachment weight exp(degree_bias * depth), impedances drawn from
/// r, x ~ U[0.005, 0.05] per unit. degree_bias = 0 gives a uniform random
/// recursive tree; positive values favor chains, negative values stars.
RadialGrid synth_grid(int num_buses, std::uint64_t seed, double degree_bias = 0.0);

}  // namespace gridvolterra
