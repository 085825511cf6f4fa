#include "gridvolterra/grid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace gridvolterra {

Eigen::VectorXd RadialGrid::resistances() const {
    Eigen::VectorXd r(num_buses());
    for (int n = 1; n <= num_buses(); ++n) r[n - 1] = line(n).r;
    return r;
}

Eigen::VectorXd RadialGrid::reactances() const {
    Eigen::VectorXd x(num_buses());
    for (int n = 1; n <= num_buses(); ++n) x[n - 1] = line(n).x;
    return x;
}

RadialGrid build_grid(const std::vector<Line>& lines) {
    const int n_buses = static_cast<int>(lines.size());
    if (n_buses == 0) throw BadIndex("grid must have at least one line");

    std::vector<Line> by_child(static_cast<std::size_t>(n_buses));
    std::vector<bool> seen(static_cast<std::size_t>(n_buses) + 1, false);
    for (const Line& l : lines) {
        if (l.child < 1 || l.child > n_buses)
            throw BadIndex("child index " + std::to_string(l.child) + " outside 1.." +
                           std::to_string(n_buses));
        if (l.parent < 0 || l.parent > n_buses)
            throw BadIndex("parent index " + std::to_string(l.parent) + " outside 0.." +
                           std::to_string(n_buses));
        if (l.child == l.parent)
            throw CycleDetected("bus " + std::to_string(l.child) + " is its own parent");
        if (seen[static_cast<std::size_t>(l.child)])
            throw DuplicateChild("bus " + std::to_string(l.child) + " has two parent lines");
        if (!(l.r > 0.0) || !(l.x >= 0.0) || !std::isfinite(l.r) || !std::isfinite(l.x))
            throw ZeroImpedance("line to bus " + std::to_string(l.child) +
                                " needs r > 0 and x >= 0");
        seen[static_cast<std::size_t>(l.child)] = true;
        by_child[static_cast<std::size_t>(l.child - 1)] = l;
    }

    // Walk each bus toward the root; a walk longer than N buses means a cycle
    // unreachable from bus 0.
    std::vector<int> depth(static_cast<std::size_t>(n_buses) + 1, -1);
    depth[0] = 0;
    for (BusId n = 1; n <= n_buses; ++n) {
        std::vector<BusId> chain;
        BusId cur = n;
        while (depth[static_cast<std::size_t>(cur)] < 0) {
            chain.push_back(cur);
            if (static_cast<int>(chain.size()) > n_buses)
                throw CycleDetected("cycle through bus " + std::to_string(n));
            cur = by_child[static_cast<std::size_t>(cur - 1)].parent;
        }
        int d = depth[static_cast<std::size_t>(cur)];
        for (auto it = chain.rbegin(); it != chain.rend(); ++it)
            depth[static_cast<std::size_t>(*it)] = ++d;
    }
    for (BusId n = 1; n <= n_buses; ++n)
        if (depth[static_cast<std::size_t>(n)] < 0)
            throw DisconnectedBus("bus " + std::to_string(n) + " not reachable from the root");

    RadialGrid g;
    g.lines_ = std::move(by_child);
    g.children_.assign(static_cast<std::size_t>(n_buses) + 1, {});
    for (const Line& l : g.lines_) g.children_[static_cast<std::size_t>(l.parent)].push_back(l.child);
    for (auto& c : g.children_) std::sort(c.begin(), c.end());

    g.topo_.resize(static_cast<std::size_t>(n_buses));
    for (BusId n = 1; n <= n_buses; ++n) g.topo_[static_cast<std::size_t>(n - 1)] = n;
    std::sort(g.topo_.begin(), g.topo_.end(), [&depth](BusId a, BusId b) {
        int da = depth[static_cast<std::size_t>(a)], db = depth[static_cast<std::size_t>(b)];
        return da != db ? da < db : a < b;
    });
    return g;
}

IncidenceDecomposition incidence(const RadialGrid& grid) {
    const int n = grid.num_buses();
    IncidenceDecomposition d;
    d.B = Eigen::MatrixXd::Zero(n, n + 1);
    for (BusId i = 1; i <= n; ++i) {
        d.B(i - 1, i) = 1.0;
        d.B(i - 1, grid.parent(i)) = -1.0;
    }
    d.b0 = d.B.col(0);
    d.Btilde = d.B.rightCols(n);
    for (BusId j = 0; j <= n; ++j) {
        auto& set = d.children[j];
        for (BusId c : grid.children(j)) set.insert(c);
    }
    return d;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sensitivity_matrices(const RadialGrid& grid) {
    const int n = grid.num_buses();
    // Btilde is unit triangular up to row order, so solving along the
    // topological order is exact; P = Btilde^{-1} has P[i,j] = 1 iff line j
    // lies on the root path of bus i.
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (BusId i : grid.topological_order()) {
        P(i - 1, i - 1) = 1.0;
        if (BusId p = grid.parent(i); p != 0) P.row(i - 1) += P.row(p - 1);
    }
    const Eigen::VectorXd r = grid.resistances();
    const Eigen::VectorXd x = grid.reactances();
    Eigen::MatrixXd R = P * r.asDiagonal() * P.transpose();
    Eigen::MatrixXd X = P * x.asDiagonal() * P.transpose();
    return {std::move(R), std::move(X)};
}

GroundTruth ground_truth_sets(const RadialGrid& grid) {
    GroundTruth gt;
    for (BusId n = 1; n <= grid.num_buses(); ++n) {
        BusId p = grid.parent(n);
        gt.edges.insert({std::min(p, n), std::max(p, n)});
    }
    for (BusId n = 1; n <= grid.num_buses(); ++n) {
        std::vector<BusId> super = grid.children(n);
        super.push_back(grid.parent(n));
        std::sort(super.begin(), super.end());
        for (std::size_t a = 0; a < super.size(); ++a)
            for (std::size_t b = a + 1; b < super.size(); ++b) {
                if (super[a] == n || super[b] == n) continue;
                gt.triads.insert({n, {super[a], super[b]}});
            }
    }
    return gt;
}

RadialGrid synth_grid(int num_buses, std::uint64_t seed, double degree_bias) {
    if (num_buses < 1) throw BadIndex("num_buses must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> imp(0.005, 0.05);
    std::vector<int> depth{0};
    std::vector<Line> lines;
    lines.reserve(static_cast<std::size_t>(num_buses));
    for (BusId n = 1; n <= num_buses; ++n) {
        std::vector<double> w(static_cast<std::size_t>(n));
        for (BusId c = 0; c < n; ++c)
            w[static_cast<std::size_t>(c)] = std::exp(degree_bias * depth[static_cast<std::size_t>(c)]);
        std::discrete_distribution<int> pick(w.begin(), w.end());
        BusId parent = static_cast<BusId>(pick(rng));
        depth.push_back(depth[static_cast<std::size_t>(parent)] + 1);
        lines.push_back({n, parent, imp(rng), imp(rng)});
    }
    return build_grid(lines);
}

}  // namespace gridvolterra
