#include "flipline/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <Eigen/Eigenvalues>

#include "flipline/errors.hpp"
#include "flipline/kinetics.hpp"
#include "flipline/landscape.hpp"

namespace flipline {

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

double operator_mu(const ModelParams& p, DetuningConvention c) {
    return c == DetuningConvention::Renormalized ? p.mu + 2.0 * p.lambda : p.mu;
}

// Q v with Q = -sqrt(lambda / 2) (b + b^dagger), tridiagonal.
Mat apply_q(const Mat& v, double lambda) {
    const int N = static_cast<int>(v.rows());
    const double s = -std::sqrt(0.5 * lambda);
    Mat out = Mat::Zero(v.rows(), v.cols());
    for (int n = 0; n + 1 < N; ++n) {
        const double e = s * std::sqrt(n + 1.0);
        out.row(n) += e * v.row(n + 1);
        out.row(n + 1) += e * v.row(n);
    }
    return out;
}

Mat apply_b(const Mat& v) {
    const int N = static_cast<int>(v.rows());
    Mat out = Mat::Zero(v.rows(), v.cols());
    for (int n = 1; n < N; ++n) out.row(n - 1) = std::sqrt(double(n)) * v.row(n);
    return out;
}

struct RawSpectrum {
    Vec values;
    Mat vectors;
};

RawSpectrum diagonalize(const ModelParams& p, int N, DetuningConvention c) {
    Eigen::SelfAdjointEigenSolver<Mat> es(oracle_hamiltonian(p, N, c));
    if (es.info() != Eigen::Success)
        throw Error(ErrorKind::TruncationInsufficient, "eigensolver failed at N = " + std::to_string(N));
    return {es.eigenvalues(), es.eigenvectors()};
}

int count_below(const Vec& e, double cap) {
    int k = 0;
    while (k < e.size() && e[k] < cap) ++k;
    return k;
}

double tail_weight(const Mat& v, int retained) {
    const int N = static_cast<int>(v.rows());
    const int edge = std::max(0, N - 10);
    double worst = 0.0;
    for (int j = 0; j < retained; ++j)
        worst = std::max(worst, v.col(j).tail(N - edge).squaredNorm());
    return worst;
}

}  // namespace

Mat oracle_hamiltonian(const ModelParams& p, int N, DetuningConvention convention) {
    if (N < 2) throw Error(ErrorKind::ValidationError, "truncation N must be at least 2");
    const double lam = p.lambda, mu = operator_mu(p, convention);
    Mat H = Mat::Zero(N, N);
    for (int n = 0; n < N; ++n) {
        const double x = n + 0.5;
        H(n, n) = -lam * mu * n + lam * lam * x * x - 0.5 * lam * mu;
    }
    const double drive = std::sqrt(0.5 * lam) * p.alpha_d;
    for (int n = 0; n + 1 < N; ++n) {
        H(n, n + 1) = H(n + 1, n) = drive * std::sqrt(n + 1.0);
        if (n + 2 < N) H(n, n + 2) = H(n + 2, n) = -0.5 * lam * std::sqrt((n + 1.0) * (n + 2.0));
    }
    return H;
}

OracleSpectrum build_and_diagonalize(const ModelParams& p, const OracleOptions& opt) {
    validate(p);
    const LandscapeGeometry geo = stationary_points(p);
    const bool dw = geo.regime == Regime::DoubleWell;
    const double cap = (dw ? geo.g_s : geo.g_c) + opt.window_above;

    int N = opt.N > 0 ? opt.N : 100;
    RawSpectrum raw;
    int retained = 0;
    double tail = 0.0;
    for (;;) {
        raw = diagonalize(p, N, opt.convention);
        retained = count_below(raw.values, cap);
        tail = tail_weight(raw.vectors, retained);
        if (tail < opt.tail_tol) break;
        if (opt.N > 0)
            throw Error(ErrorKind::TruncationInsufficient,
                        "occupation tail " + std::to_string(tail) + " at the truncation edge for N = " +
                            std::to_string(N));
        N += 50;
        if (N > opt.max_N)
            throw Error(ErrorKind::TruncationInsufficient,
                        "no N up to " + std::to_string(opt.max_N) + " passes the tail test");
    }
    if (retained == 0) throw Error(ErrorKind::NoBoundStates, "no eigenvalue below the energy cap");

    OracleSpectrum s;
    s.params = p;
    s.convention = opt.convention;
    s.dimension = N;
    s.energy_cap = cap;
    s.max_tail = tail;
    {
        const RawSpectrum wider = diagonalize(p, N + 50, opt.convention);
        s.convergence_shift = std::abs(wider.values[retained - 1] - raw.values[retained - 1]);
        if (s.convergence_shift > opt.convergence_tol)
            throw Error(ErrorKind::TruncationInsufficient,
                        "top retained eigenvalue moves by " + std::to_string(s.convergence_shift) +
                            " between N and N + 50");
    }

    Mat V = raw.vectors.leftCols(retained);
    Vec E = raw.values.head(retained);
    const Mat H = oracle_hamiltonian(p, N, opt.convention);

    // Tunnel doublets: rotate each near-degenerate group onto Q eigenstates.
    const double ctol = opt.cluster_tol * p.lambda;
    for (int i = 0; i < retained;) {
        int j = i + 1;
        while (j < retained && E[j] - E[j - 1] < ctol) ++j;
        if (j - i > 1) {
            const Mat sub = V.middleCols(i, j - i);
            Eigen::SelfAdjointEigenSolver<Mat> qs(sub.transpose() * apply_q(sub, p.lambda));
            V.middleCols(i, j - i) = sub * qs.eigenvectors();
            const Mat rot = V.middleCols(i, j - i);
            const Mat hs = rot.transpose() * H * rot;
            for (int k = 0; k < j - i; ++k) E[i + k] = hs(k, k);
        }
        i = j;
    }
    std::vector<int> order(retained);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return E[a] < E[b]; });
    s.vectors.resize(N, retained);
    for (int k = 0; k < retained; ++k) {
        s.vectors.col(k) = V.col(order[k]);
        s.eigenvalues.push_back(E[order[k]]);
    }

    const Mat QV = apply_q(s.vectors, p.lambda);
    s.classification_margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < retained; ++k) {
        const double q = s.vectors.col(k).dot(QV.col(k));
        s.q_expect.push_back(q);
        const WellId side{q < 0.0 ? -1 : 1};
        StateLabel label = StateLabel::Delocalized;
        if (geo.has_well(side) && !(dw && s.eigenvalues[k] > geo.g_s)) {
            const double ratio = std::abs(q) / std::abs(geo.qmin(side));
            if (ratio >= opt.delocalized_band) {
                label = side.sigma < 0 ? StateLabel::Left : StateLabel::Right;
                s.classification_margin = std::min(s.classification_margin, ratio);
            }
        }
        s.well_labels.push_back(label);
    }
    s.lowering_elements = exact_matrix_elements(s);
    return s;
}

Mat exact_matrix_elements(const OracleSpectrum& s) {
    // a = i b, so |<i|a|j>| = |<i|b|j>| and b is real in this basis.
    return (s.vectors.transpose() * apply_b(s.vectors)).cwiseAbs();
}

std::vector<int> well_states(const OracleSpectrum& s, WellId well) {
    const StateLabel want = well.sigma < 0 ? StateLabel::Left : StateLabel::Right;
    std::vector<int> out;
    for (std::size_t k = 0; k < s.well_labels.size(); ++k)
        if (s.well_labels[k] == want) out.push_back(static_cast<int>(k));
    return out;
}

PauliResult pauli_steady_state(const OracleSpectrum& s, double kappa) {
    if (!(kappa > 0.0)) throw Error(ErrorKind::ValidationError, "kappa must be positive");
    const int n = static_cast<int>(s.eigenvalues.size());
    const Mat& A = s.lowering_elements;
    std::vector<std::vector<double>> W(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) W[i][j] = 2.0 * kappa * A(j, i) * A(j, i);

    PauliResult r;
    r.rho = stationary_distribution(W);
    for (int m : resonance_offsets(s.params))
        if (m != 0) r.resonances.push_back(m);
    r.resonant_window = !r.resonances.empty();
    if (n < 2) return r;

    using Real = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<50>,
                                               boost::multiprecision::et_off>;
    using MpMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
    MpMat G = MpMat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        Real out = 0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            G(j, i) = Real(W[i][j]);
            out += G(j, i);
        }
        G(i, i) = -out;
    }
    Eigen::EigenSolver<MpMat> es(G, false);
    if (es.info() != Eigen::Success)
        throw Error(ErrorKind::NullSpaceDegenerate, "relaxation spectrum did not converge");
    std::vector<Real> rates;
    for (int k = 0; k < n; ++k) rates.push_back(boost::multiprecision::abs(es.eigenvalues()[k].real()));
    std::sort(rates.begin(), rates.end());
    r.slowest_rate = static_cast<double>(rates[1]);
    return r;
}

AlignmentReport level_alignment(const ModelParams& p, const OracleSpectrum& s) {
    const LandscapeGeometry geo = double_well_geometry(p);
    const std::vector<int> sh = well_states(s, shallow_well(p.alpha_d));
    const std::vector<int> dp = well_states(s, deep_well(p.alpha_d));
    AlignmentReport rep;
    if (dp.size() < 2) return rep;
    for (int i : sh) {
        const double e = s.eigenvalues[i];
        if (!(e < geo.g_s)) continue;
        std::size_t k = 0;
        for (std::size_t j = 1; j < dp.size(); ++j)
            if (std::abs(s.eigenvalues[dp[j]] - e) < std::abs(s.eigenvalues[dp[k]] - e)) k = j;
        const std::size_t lo = k == 0 ? 0 : k - 1;
        const std::size_t hi = k + 1 < dp.size() ? k + 1 : k;
        const double spacing = (s.eigenvalues[dp[hi]] - s.eigenvalues[dp[lo]]) / double(hi - lo);
        rep.pairs.push_back({i, dp[k], std::abs(e - s.eigenvalues[dp[k]]) / spacing});
    }
    if (rep.pairs.empty()) return rep;
    std::vector<double> m;
    for (const auto& pr : rep.pairs) m.push_back(pr.mismatch);
    std::sort(m.begin(), m.end());
    rep.max_mismatch = m.back();
    const std::size_t h = m.size() / 2;
    rep.median_mismatch = m.size() % 2 ? m[h] : 0.5 * (m[h - 1] + m[h]);
    return rep;
}

}  // namespace flipline
