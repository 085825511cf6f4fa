#include "gridvolterra/identify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gridvolterra/errors.hpp"
#include "gridvolterra/features.hpp"
#include "gridvolterra/powerflow.hpp"

namespace gridvolterra {

namespace {

void check_kernels(const std::vector<VolterraKernels>& kernels) {
    const int N = static_cast<int>(kernels.size());
    if (N == 0) throw DimensionMismatch("empty kernel list");
    const Eigen::Index pair_count = static_cast<Eigen::Index>(N) * (N + 1) / 2;
    for (int b = 0; b < N; ++b) {
        const VolterraKernels& k = kernels[b];
        if (k.n != b + 1) throw BadIndex("kernels must be ordered by bus, 1..N");
        if (k.rho1.size() != N || k.rho2.size() != pair_count)
            throw DimensionMismatch("kernel coefficient lengths do not match the bus count");
        if (!k.rho1.allFinite() || !k.rho2.allFinite()) throw NonFiniteInput("kernels");
    }
}

RocCurve roc_from_scores(std::vector<std::pair<double, bool>> labeled) {
    long long pos = 0, neg = 0;
    for (const auto& it : labeled) {
        if (!std::isfinite(it.first)) throw NonFiniteInput("candidate scores");
        (it.second ? pos : neg)++;
    }
    if (pos == 0) throw DegenerateTruth("no positive candidates");
    if (neg == 0) throw DegenerateTruth("no negative candidates");

    std::sort(labeled.begin(), labeled.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });

    RocCurve out;
    out.positives = pos;
    out.negatives = neg;
    const double inf = std::numeric_limits<double>::infinity();
    out.points.push_back({inf, 0.0, 0.0});

    long long tp = 0, fp = 0, prev_tp = 0, prev_fp = 0;
    long long num = 0;
    std::size_t i = 0;
    while (i < labeled.size()) {
        const double v = labeled[i].first;
        while (i < labeled.size() && labeled[i].first == v) {
            (labeled[i].second ? tp : fp)++;
            ++i;
        }
        num += (fp - prev_fp) * (tp + prev_tp);
        out.points.push_back({v, static_cast<double>(fp) / static_cast<double>(neg),
                              static_cast<double>(tp) / static_cast<double>(pos)});
        prev_tp = tp;
        prev_fp = fp;
    }
    out.points.push_back({-inf, 1.0, 1.0});
    out.auc = static_cast<double>(num) / static_cast<double>(2 * pos * neg);
    return out;
}

Eigen::MatrixXd concentration_of(const VoltageSeries& series, bool allow_ridge) {
    const Eigen::Index T = series.V.rows();
    const Eigen::Index N = series.V.cols();
    if (N < 2) throw DimensionMismatch("covariance baselines need at least two buses");
    if (T < 2) throw DimensionMismatch("covariance baselines need at least two time steps");
    if (!series.V.allFinite()) throw NonFiniteInput("voltage series");

    Eigen::MatrixXd X = series.V;
    X.rowwise() -= X.colwise().mean();
    Eigen::MatrixXd sigma = (X.transpose() * X) / static_cast<double>(T - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.info() != Eigen::Success) throw SingularCovariance("eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double lmax = ev.maxCoeff();
    const double lmin = ev.minCoeff();
    const bool near_singular = !(lmin > 0.0) || lmax / lmin > 1e12;
    if (near_singular) {
        if (!allow_ridge)
            throw SingularCovariance("sample covariance condition number exceeds 1e12");
        const double tr = sigma.trace();
        if (!(tr > 0.0)) throw SingularCovariance("series has zero variance");
        ev.array() += 1e-8 * tr / static_cast<double>(N);
        if (!(ev.minCoeff() > 0.0))
            throw SingularCovariance("covariance not positive definite after ridge");
    }
    Eigen::MatrixXd K =
        es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    return 0.5 * (K + K.transpose());
}

void check_scores(const EdgeScores& scores) {
    const Eigen::Index N = scores.S.rows();
    if (scores.S.cols() != N || N < 2)
        throw DimensionMismatch("edge scores must be square over at least two buses");
    if (!scores.S.allFinite()) throw NonFiniteInput("edge scores");
}

}  // namespace

EdgeScores edge_scores_from_kernels(const std::vector<VolterraKernels>& kernels) {
    check_kernels(kernels);
    const int N = static_cast<int>(kernels.size());
    EdgeScores out;
    out.S = Eigen::MatrixXd::Zero(N, N);
    for (const VolterraKernels& k : kernels) {
        for (BusId i = 1; i <= N; ++i) {
            if (i == k.n) continue;
            const double v = std::abs(k.rho1[i - 1]);
            const int a = std::min<int>(k.n, i) - 1;
            const int b = std::max<int>(k.n, i) - 1;
            if (v > out.S(a, b)) {
                out.S(a, b) = v;
                out.S(b, a) = v;
            }
        }
    }
    return out;
}

TriadScores triad_scores_from_kernels(const std::vector<VolterraKernels>& kernels) {
    check_kernels(kernels);
    const int N = static_cast<int>(kernels.size());
    TriadScores out;
    out.num_buses = N;
    PairIndexer pairs(N);
    for (const VolterraKernels& k : kernels) {
        for (BusId i = 1; i <= N; ++i) {
            if (i == k.n) continue;
            for (BusId j = i + 1; j <= N; ++j) {
                if (j == k.n) continue;
                const double v = std::abs(k.rho2[pairs.flat(i, j)]);
                if (v != 0.0) out.score[{k.n, i, j}] = v;
            }
        }
    }
    return out;
}

RocCurve roc_edges(const EdgeScores& scores, const std::set<std::pair<BusId, BusId>>& truth) {
    check_scores(scores);
    const int N = static_cast<int>(scores.S.rows());

    std::set<std::pair<BusId, BusId>> positive;
    for (const auto& e : truth) {
        const BusId a = std::min(e.first, e.second);
        const BusId b = std::max(e.first, e.second);
        if (a == b || a < 0 || b > N) throw BadIndex("truth edge outside the bus range");
        if (a < 1) continue;  // substation edge, outside the candidate set
        positive.insert({a, b});
    }

    std::vector<std::pair<double, bool>> labeled;
    labeled.reserve(static_cast<std::size_t>(N) * (N - 1) / 2);
    for (BusId i = 1; i <= N; ++i)
        for (BusId j = i + 1; j <= N; ++j)
            labeled.emplace_back(scores.S(i - 1, j - 1), positive.count({i, j}) > 0);
    return roc_from_scores(std::move(labeled));
}

RocCurve roc_triads(const TriadScores& scores,
                    const std::set<std::pair<BusId, std::pair<BusId, BusId>>>& truth) {
    const int N = scores.num_buses;
    if (N < 3) throw DimensionMismatch("triad ROC needs at least three buses");

    std::set<std::tuple<BusId, BusId, BusId>> positive;
    for (const auto& t : truth) {
        const BusId n = t.first;
        const BusId a = std::min(t.second.first, t.second.second);
        const BusId b = std::max(t.second.first, t.second.second);
        if (n < 0 || n > N || a == b || a < 0 || b > N || n == a || n == b)
            throw BadIndex("truth triad outside the bus range");
        if (n < 1 || a < 1) continue;  // involves the substation
        positive.insert({n, a, b});
    }

    std::vector<std::pair<double, bool>> labeled;
    for (BusId n = 1; n <= N; ++n) {
        for (BusId i = 1; i <= N; ++i) {
            if (i == n) continue;
            for (BusId j = i + 1; j <= N; ++j) {
                if (j == n) continue;
                const auto it = scores.score.find({n, i, j});
                const double v = it == scores.score.end() ? 0.0 : it->second;
                labeled.emplace_back(v, positive.count({n, i, j}) > 0);
            }
        }
    }
    return roc_from_scores(std::move(labeled));
}

EdgeScores baseline_linear_pc(const VoltageSeries& series, bool allow_ridge) {
    const Eigen::MatrixXd K = concentration_of(series, allow_ridge);
    const Eigen::Index N = K.rows();
    EdgeScores out;
    out.S = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = i + 1; j < N; ++j) {
            const double den = std::sqrt(K(i, i) * K(j, j));
            if (!(den > 0.0)) throw SingularCovariance("nonpositive concentration diagonal");
            const double v = std::abs(K(i, j)) / den;
            out.S(i, j) = v;
            out.S(j, i) = v;
        }
    }
    return out;
}

EdgeScores baseline_concentration(const VoltageSeries& series, bool allow_ridge) {
    const Eigen::MatrixXd K = concentration_of(series, allow_ridge);
    const Eigen::Index N = K.rows();
    EdgeScores out;
    out.S = Eigen::MatrixXd::Zero(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = i + 1; j < N; ++j) {
            const double v = std::abs(K(i, j));
            out.S(i, j) = v;
            out.S(j, i) = v;
        }
    }
    return out;
}

EvaluationReport evaluate(const RadialGrid& grid, const VoltageSeries& series,
                          const SolverConfig& cfg, const std::vector<std::string>& methods) {
    if (series.V.cols() != grid.num_buses())
        throw DimensionMismatch("series bus count does not match the grid");

    std::vector<std::string> order;
    for (const std::string& m : methods) {
        if (m != "volterra" && m != "pc" && m != "concentration")
            throw ConfigError("unknown method: " + m);
        if (std::find(order.begin(), order.end(), m) == order.end()) order.push_back(m);
    }
    if (order.empty()) throw ConfigError("no evaluation method requested");

    const GroundTruth truth = ground_truth_sets(grid);
    EvaluationReport rep;
    rep.methods = order;

    for (const std::string& m : order) {
        if (m == "volterra") {
            const FeatureMatrix features = build_feature_matrix(series);
            rep.identify = solve_all(series, features, cfg);
            rep.edge_scores[m] = edge_scores_from_kernels(rep.identify.kernels);
            rep.triads = triad_scores_from_kernels(rep.identify.kernels);

            // triad truth restricted to what the estimator can express: the
            // substation appears in neither the center nor the pair
            long long visible = 0;
            for (const auto& t : truth.triads)
                if (t.first >= 1 && std::min(t.second.first, t.second.second) >= 1) ++visible;
            if (visible > 0 && grid.num_buses() >= 3) {
                rep.triad_roc = roc_triads(rep.triads, truth.triads);
                rep.has_triads = true;
            }
        } else if (m == "pc") {
            rep.edge_scores[m] = baseline_linear_pc(series);
        } else {
            rep.edge_scores[m] = baseline_concentration(series);
        }
        rep.edge_roc[m] = roc_edges(rep.edge_scores[m], truth.edges);
    }
    return rep;
}

}  // namespace gridvolterra
