#include "gridvolterra/powerflow.hpp"

#include <cmath>
#include <cstdlib>
#include <random>
#include <string>

#include "gridvolterra/parallel.hpp"

namespace gridvolterra {

namespace {

void check_dims(const RadialGrid& grid, const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
    if (p.size() != grid.num_buses() || q.size() != grid.num_buses())
        throw DimensionMismatch("injection vectors must have one entry per non-root bus");
}

}  // namespace

double branch_flow_residual(const RadialGrid& grid, const Eigen::VectorXd& p,
                            const Eigen::VectorXd& q, double v0, const PowerFlowState& state) {
    const int n = grid.num_buses();
    double res = 0.0;
    for (BusId b = 1; b <= n; ++b) {
        const Line& ln = grid.line(b);
        const std::complex<double> z(ln.r, ln.x);
        const double vp = ln.parent == 0 ? v0 : state.v[ln.parent - 1];
        std::complex<double> sum_children(0.0, 0.0);
        for (BusId c : grid.children(b)) sum_children += state.S[c - 1];
        const std::complex<double> s_n(p[b - 1], q[b - 1]);
        const std::complex<double> r_power =
            sum_children - state.S[b - 1] + state.ell[b - 1] * z - s_n;
        const double r_volt = vp - 2.0 * (ln.r * state.S[b - 1].real() + ln.x * state.S[b - 1].imag()) +
                              state.ell[b - 1] * std::norm(z) - state.v[b - 1];
        const double r_current = std::norm(state.S[b - 1]) - vp * state.ell[b - 1];
        res = std::max({res, std::abs(r_power), std::abs(r_volt), std::abs(r_current)});
    }
    return res;
}

PowerFlowState solve_exact(const RadialGrid& grid, const Eigen::VectorXd& p,
                           const Eigen::VectorXd& q, double v0, double tol, int max_iter) {
    check_dims(grid, p, q);
    if (!(tol > 0.0)) throw BadIndex("tol must be > 0");
    if (!(v0 > 0.0)) throw NonPositiveVoltage("substation voltage must be positive");
    const int n = grid.num_buses();
    const auto& topo = grid.topological_order();

    PowerFlowState st;
    st.v = Eigen::VectorXd::Constant(n, v0);  // flat start
    st.S = Eigen::VectorXcd::Zero(n);
    st.ell = Eigen::VectorXd::Zero(n);

    for (int it = 0; it < max_iter; ++it) {
        // current magnitudes from the previous iterate
        for (BusId b = 1; b <= n; ++b) {
            const double vp = grid.parent(b) == 0 ? v0 : st.v[grid.parent(b) - 1];
            st.ell[b - 1] = std::norm(st.S[b - 1]) / vp;
        }
        // backward sweep: leaves toward root
        for (auto it_b = topo.rbegin(); it_b != topo.rend(); ++it_b) {
            const BusId b = *it_b;
            const Line& ln = grid.line(b);
            std::complex<double> acc(-p[b - 1], -q[b - 1]);
            for (BusId c : grid.children(b)) acc += st.S[c - 1];
            acc += st.ell[b - 1] * std::complex<double>(ln.r, ln.x);
            st.S[b - 1] = acc;
        }
        // forward sweep: root toward leaves
        double dv = 0.0;
        for (BusId b : topo) {
            const Line& ln = grid.line(b);
            const double vp = ln.parent == 0 ? v0 : st.v[ln.parent - 1];
            const double vb = vp - 2.0 * (ln.r * st.S[b - 1].real() + ln.x * st.S[b - 1].imag()) +
                              st.ell[b - 1] * (ln.r * ln.r + ln.x * ln.x);
            dv = std::max(dv, std::abs(vb - st.v[b - 1]));
            st.v[b - 1] = vb;
            if (!(vb > 0.0))
                throw NonPositiveVoltage("voltage collapse at bus " + std::to_string(b));
        }
        // make the current equation exact, then check the full residual
        for (BusId b = 1; b <= n; ++b) {
            const double vp = grid.parent(b) == 0 ? v0 : st.v[grid.parent(b) - 1];
            st.ell[b - 1] = std::norm(st.S[b - 1]) / vp;
        }
        const double res = branch_flow_residual(grid, p, q, v0, st);
        if (dv <= tol && res <= tol) return st;
        if (it == max_iter - 1)
            throw NoConvergence(max_iter, res,
                                "branch flow sweep did not converge in " +
                                    std::to_string(max_iter) + " iterations (residual " +
                                    std::to_string(res) + ")");
    }
    return st;  // unreachable
}

Eigen::VectorXd solve_linear(const RadialGrid& grid, const Eigen::VectorXd& p,
                             const Eigen::VectorXd& q, double v0) {
    check_dims(grid, p, q);
    auto [R, X] = sensitivity_matrices(grid);
    return 2.0 * (R * p) + 2.0 * (X * q) + Eigen::VectorXd::Constant(grid.num_buses(), v0);
}

VoltageSeries simulate_series(const RadialGrid& grid, const InjectionProfile& profile,
                              FlowModel model, double tol, int max_iter, int jobs) {
    const int T = static_cast<int>(profile.p.rows());
    const int n = grid.num_buses();
    if (profile.q.rows() != T || profile.p.cols() != n || profile.q.cols() != n)
        throw DimensionMismatch("profile dimensions do not match the grid");
    if (T < 1) throw DimensionMismatch("profile needs at least one time slot");

    VoltageSeries out;
    out.V.resize(T, n);
    out.timestamps.resize(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t) out.timestamps[static_cast<std::size_t>(t)] = t;

    parallel_for(T, jobs, [&](int t) {
        const Eigen::VectorXd pt = profile.p.row(t);
        const Eigen::VectorXd qt = profile.q.row(t);
        if (model == FlowModel::Exact) {
            try {
                out.V.row(t) = solve_exact(grid, pt, qt, profile.v0, tol, max_iter).v;
            } catch (const Error& e) {
                throw NoConvergence(max_iter, 0.0,
                                    "time slot " + std::to_string(t) + ": " + e.what());
            }
        } else {
            out.V.row(t) = solve_linear(grid, pt, qt, profile.v0);
        }
    });
    return out;
}

InjectionProfile synth_profiles(const RadialGrid& grid, int T, std::uint64_t seed,
                                double base_load, double volatility, double solar_fraction) {
    if (T < 1) throw BadIndex("T must be >= 1");
    if (volatility < 0.0) throw BadIndex("volatility must be >= 0");
    const int n = grid.num_buses();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // per-bus bases: consumers draw around -base_load, a solar_fraction
    // subset nets out to positive generation
    Eigen::VectorXd base_p(n), base_q(n), solar_gate(n);
    for (int b = 0; b < n; ++b) {
        const double mag = base_load * (0.5 + unif(rng));
        const bool solar = unif(rng) < solar_fraction;
        base_p[b] = solar ? 0.8 * mag : -mag;
        base_q[b] = -0.4 * mag * (0.5 + unif(rng));  // lagging power factor
        solar_gate[b] = solar ? 1.0 : 0.0;
    }

    InjectionProfile prof;
    prof.p.resize(T, n);
    prof.q.resize(T, n);
    if (volatility == 0.0) {
        prof.p = base_p.transpose().replicate(T, 1);
        prof.q = base_q.transpose().replicate(T, 1);
        return prof;
    }

    // AR(1) fluctuations, stationary unit variance. Consumption follows one
    // shared load factor (diurnal shape times a common lognormal swing, the
    // feeder-wide weather/time-of-day driver) with skewed per-bus residuals;
    // solar buses track a shared irradiance factor (diurnal envelope times a
    // common cloud process) with small local residuals. Reactive power moves
    // with the same drivers through per-bus lagging swings. The swing driver
    // is soft-clipped so the heaviest draws stay inside the solvable loading
    // range of the feeder.
    double phi = 0.5;
    if (const char* e = std::getenv("GV_PHI")) phi = std::atof(e);
    const double innov = std::sqrt(1.0 - phi * phi);
    double sat = 3.0;
    if (const char* e = std::getenv("GV_SAT")) sat = std::atof(e);
    // mean-one lognormal swing at an effective per-bus volatility
    auto swing = [&](double veff, double f) {
        const double g = sat > 0.0 ? sat * std::tanh(f / sat) : f;
        return std::exp(veff * g - 0.5 * veff * veff);
    };
    Eigen::VectorXd fp(n), fq(n);
    for (int b = 0; b < n; ++b) {
        fp[b] = gauss(rng);
        fq[b] = gauss(rng);
    }
    double cloud = gauss(rng);
    double weather = gauss(rng);
    for (int t = 0; t < T; ++t) {
        const double shape = 0.5 + 0.5 * std::sin(2.0 * M_PI * (t % 48) / 48.0);
        if (t > 0) {
            cloud = phi * cloud + innov * gauss(rng);
            weather = phi * weather + innov * gauss(rng);
        }
        const double irradiance = std::max(shape * (1.0 + volatility * cloud), 0.0);
        const double load_factor = (0.75 + 0.25 * shape) * swing(volatility, weather);
        for (int b = 0; b < n; ++b) {
            if (t > 0) {
                fp[b] = phi * fp[b] + innov * gauss(rng);
                fq[b] = phi * fq[b] + innov * gauss(rng);
            }
            if (solar_gate[b] > 0.0) {
                prof.p(t, b) = base_p[b] * irradiance * (1.0 + 0.25 * volatility * fp[b]);
            } else {
                prof.p(t, b) = base_p[b] * load_factor * swing(volatility, fp[b]);
            }
            prof.q(t, b) = base_q[b] * load_factor * swing(volatility, fq[b]);
        }
    }
    return prof;
}

VoltageSeries apply_noise(const VoltageSeries& series, double noise_std, std::uint64_t seed) {
    if (noise_std < 0.0) throw BadIndex("noise_std must be >= 0");
    VoltageSeries out = series;
    if (noise_std == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, noise_std);
    for (Eigen::Index t = 0; t < out.V.rows(); ++t)
        for (Eigen::Index b = 0; b < out.V.cols(); ++b) out.V(t, b) += gauss(rng);
    return out;
}

}  // namespace gridvolterra
