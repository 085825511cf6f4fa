#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <vector>

#include "gridvolterra/grid.hpp"

namespace gridvolterra {

// Everything is per-unit, and "voltage" always means the SQUARED magnitude
// (v = |V|^2), matching the branch flow equations. Injections are net: a
// consuming bus has negative p.

/// Time series of injections; row t holds the per-bus active/reactive
/// injections for slot t (column n-1 is bus n).
struct InjectionProfile {
    Eigen::MatrixXd p;  ///< T x N active injections
    Eigen::MatrixXd q;  ///< T x N reactive injections
    double v0 = 1.0;    ///< squared substation voltage
};

/// One branch-flow solution: per-bus squared voltage magnitudes, per-line
/// sending-end complex flows S_n = P_n + jQ_n, and squared line currents.
struct PowerFlowState {
    Eigen::VectorXd v;    ///< length N, v_n > 0
    Eigen::VectorXcd S;   ///< length N
    Eigen::VectorXd ell;  ///< length N, |S_n|^2 = v_parent(n) * ell_n
};

/// T x N matrix of squared voltage magnitudes plus a slot index.
struct VoltageSeries {
    Eigen::MatrixXd V;
    std::vector<double> timestamps;
};

enum class FlowModel { Exact, Linear };

/// Solve the exact branch flow equations by backward/forward sweep from a
/// flat start. The backward sweep aggregates line flows from the leaves
/// (with losses ell_n z_n), the forward sweep propagates voltages from the
/// root; iteration stops when both the voltage change and the max equation
/// residual fall below tol. Throws NoConvergence or NonPositiveVoltage.
PowerFlowState solve_exact(const RadialGrid& grid, const Eigen::VectorXd& p,
                           const Eigen::VectorXd& q, double v0 = 1.0, double tol = 1e-10,
                           int max_iter = 200);

/// Max absolute residual of the three branch-flow equations at a state.
double branch_flow_residual(const RadialGrid& grid, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& q, double v0, const PowerFlowState& state);

/// Closed-form linearized flow: v = 2 R p + 2 X q + v0 * 1.
Eigen::VectorXd solve_linear(const RadialGrid& grid, const Eigen::VectorXd& p,
                             const Eigen::VectorXd& q, double v0 = 1.0);

/// Solve one flow per profile row. Per-slot solves are independent; jobs > 1
/// maps them over that many threads with identical results.
VoltageSeries simulate_series(const RadialGrid& grid, const InjectionProfile& profile,
                              FlowModel model = FlowModel::Exact, double tol = 1e-10,
                              int max_iter = 200, int jobs = 1);

/// Reproducible synthetic load/solar injections: per-bus base draws around
/// -base_load, AR(1) fluctuations scaled by volatility, and a solar_fraction
/// subset of buses with positive (generation) injections gated by a diurnal
/// shape. volatility = 0 gives constant profiles.
InjectionProfile synth_profiles(const RadialGrid& grid, int T, std::uint64_t seed,
                                double base_load = 0.01, double volatility = 0.4,
                                double solar_fraction = 0.3);

/// Additive zero-mean Gaussian measurement noise on v (applied at export
/// time; the solvers themselves stay deterministic).
VoltageSeries apply_noise(const VoltageSeries& series, double noise_std, std::uint64_t seed);

}  // namespace gridvolterra
