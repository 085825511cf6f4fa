#include "gridvolterra/features.hpp"

#include <string>

namespace gridvolterra {

Eigen::VectorXd reduced_kron(const Eigen::VectorXd& v) {
    const int n = static_cast<int>(v.size());
    if (n < 1) throw BadIndex("reduced_kron needs at least one entry");
    Eigen::VectorXd out(n * (n + 1) / 2);
    int k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) out[k++] = v[i] * v[j];
    return out;
}

FeatureMatrix build_feature_matrix(const VoltageSeries& series) {
    const int T = static_cast<int>(series.V.rows());
    const int n = static_cast<int>(series.V.cols());
    if (T < 1 || n < 1) throw DimensionMismatch("series must be T x N with T, N >= 1");
    if (!series.V.allFinite()) throw NonFiniteInput("voltage series contains non-finite entries");
    FeatureMatrix f;
    f.num_buses = n;
    f.M.resize(n + n * (n + 1) / 2, T);
    for (int t = 0; t < T; ++t) {
        const Eigen::VectorXd vt = series.V.row(t);
        f.M.col(t).head(n) = vt;
        f.M.col(t).tail(n * (n + 1) / 2) = reduced_kron(vt);
    }
    return f;
}

VolterraKernels zero_kernels(int num_buses, BusId n) {
    if (n < 1 || n > num_buses) throw BadIndex("bus index outside 1..N");
    VolterraKernels k;
    k.n = n;
    k.rho1 = Eigen::VectorXd::Zero(num_buses);
    k.rho2 = Eigen::VectorXd::Zero(num_buses * (num_buses + 1) / 2);
    return k;
}

Eigen::MatrixXd kernels_to_Rn(const VolterraKernels& kernels) {
    const int n = static_cast<int>(kernels.rho1.size());
    PairIndexer pairs(n);
    if (kernels.rho2.size() != pairs.size())
        throw DimensionMismatch("rho2 length does not match N(N+1)/2");
    Eigen::MatrixXd Rn = Eigen::MatrixXd::Zero(n, n + 1);
    Rn.col(0) = kernels.rho1;
    for (BusId i = 1; i <= n; ++i)
        for (BusId j = 1; j <= n; ++j) Rn(i - 1, j) = kernels.rho2[pairs.flat(i, j)];
    return Rn;
}

VolterraKernels Rn_to_kernels(const Eigen::MatrixXd& Rn, BusId n) {
    const int nb = static_cast<int>(Rn.rows());
    if (Rn.cols() != nb + 1) throw DimensionMismatch("Rn must be N x (N+1)");
    PairIndexer pairs(nb);
    VolterraKernels k = zero_kernels(nb, n);
    k.rho1 = Rn.col(0);
    for (BusId i = 1; i <= nb; ++i)
        for (BusId j = i; j <= nb; ++j) k.rho2[pairs.flat(i, j)] = Rn(i - 1, j);
    return k;
}

StackedModel assemble_stacked(const VoltageSeries& series,
                              const std::vector<VolterraKernels>& kernels) {
    const int T = static_cast<int>(series.V.rows());
    const int n = static_cast<int>(series.V.cols());
    if (static_cast<int>(kernels.size()) != n)
        throw DimensionMismatch("need one kernel set per non-root bus");
    StackedModel m;
    m.V1 = series.V.transpose();
    m.V2.resize(n * (n + 1) / 2, T);
    for (int t = 0; t < T; ++t) m.V2.col(t) = reduced_kron(series.V.row(t).transpose());
    m.R1.resize(n, n);
    m.R2.resize(n, n * (n + 1) / 2);
    for (int b = 0; b < n; ++b) {
        const VolterraKernels& k = kernels[static_cast<std::size_t>(b)];
        if (k.n != b + 1)
            throw DimensionMismatch("kernels must be ordered by bus; slot " + std::to_string(b) +
                                    " holds bus " + std::to_string(k.n));
        if (k.rho1.size() != n || k.rho2.size() != m.V2.rows())
            throw DimensionMismatch("kernel lengths do not match the series width");
        m.R1.row(b) = k.rho1.transpose();
        m.R2.row(b) = k.rho2.transpose();
    }
    m.E = m.V1 - m.R1 * m.V1 - m.R2 * m.V2;
    return m;
}

}  // namespace gridvolterra
