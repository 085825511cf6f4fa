#pragma once

#include <Eigen/Dense>
#include <vector>

#include "gridvolterra/errors.hpp"
#include "gridvolterra/grid.hpp"
#include "gridvolterra/powerflow.hpp"

namespace gridvolterra {

/// Flat indexing of unordered bus pairs (i, j), 1 <= i <= j <= N, in
/// lexicographic order: (1,1), (1,2), ..., (1,N), (2,2), ..., (N,N).
/// The pair combiner is multiplicative and symmetric, so (j, i) resolves to
/// the same flat position as (i, j).
class PairIndexer {
  public:
    explicit PairIndexer(int num_buses) : n_(num_buses) {}

    [[nodiscard]] int num_buses() const { return n_; }
    [[nodiscard]] int size() const { return n_ * (n_ + 1) / 2; }

    [[nodiscard]] int flat(BusId i, BusId j) const {
        if (i < 1 || j < 1 || i > n_ || j > n_) throw BadIndex("pair index outside 1..N");
        if (i > j) std::swap(i, j);
        const int a = i - 1;
        return a * n_ - a * (a - 1) / 2 + (j - i);
    }

    /// Inverse of flat(); returns (i, j) with i <= j.
    [[nodiscard]] std::pair<BusId, BusId> unflat(int k) const {
        if (k < 0 || k >= size()) throw BadIndex("flat pair index out of range");
        int i = 1;
        while (k >= n_ - i + 1) {
            k -= n_ - i + 1;
            ++i;
        }
        return {i, i + k};
    }

  private:
    int n_;
};

/// Reduced Kronecker product v (x) v: all pairwise products v_i v_j with
/// i <= j, laid out by PairIndexer.
Eigen::VectorXd reduced_kron(const Eigen::VectorXd& v);

/// Stacked regression features: D x T with D = N + N(N+1)/2. Column t is
/// m(t) = [v(t); v(t) (x) v(t)].
struct FeatureMatrix {
    Eigen::MatrixXd M;
    int num_buses = 0;
};

FeatureMatrix build_feature_matrix(const VoltageSeries& series);

/// Graph Volterra kernels of one bus: first-order coefficients over buses
/// 1..N (slot i-1) and second-order coefficients over flat pairs. Structural
/// zeros: rho1[n] = 0; rho2 is zero on every pair containing n and on every
/// diagonal pair (i, i).
struct VolterraKernels {
    BusId n = 0;
    Eigen::VectorXd rho1;  ///< length N
    Eigen::VectorXd rho2;  ///< length N(N+1)/2

    [[nodiscard]] double pair(BusId i, BusId j) const {
        return rho2[PairIndexer(static_cast<int>(rho1.size())).flat(i, j)];
    }
};

/// All-zero kernels of the right shape for bus n.
VolterraKernels zero_kernels(int num_buses, BusId n);

/// The N x (N+1) per-bus coefficient matrix: column 0 holds rho1, and entry
/// (i, j) for j >= 1 holds the coefficient of pair {i, j} (so a shared pair
/// appears in both of its rows; the matrix is full, not triangular).
Eigen::MatrixXd kernels_to_Rn(const VolterraKernels& kernels);

/// Inverse of kernels_to_Rn; exact round-trip.
VolterraKernels Rn_to_kernels(const Eigen::MatrixXd& Rn, BusId n);

/// The stacked self-driven model V1 = R1 V1 + R2 V2 + E, with row n of
/// R1/R2 holding bus n's kernels and E defined by the identity.
struct StackedModel {
    Eigen::MatrixXd V1;  ///< N x T, columns v(t)
    Eigen::MatrixXd V2;  ///< N(N+1)/2 x T, columns v(t) (x) v(t)
    Eigen::MatrixXd R1;  ///< N x N
    Eigen::MatrixXd R2;  ///< N x N(N+1)/2
    Eigen::MatrixXd E;   ///< N x T residuals
};

StackedModel assemble_stacked(const VoltageSeries& series,
                              const std::vector<VolterraKernels>& kernels);

}  // namespace gridvolterra
