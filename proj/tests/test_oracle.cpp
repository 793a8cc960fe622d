#include <doctest.h>

#include <cmath>
#include <random>

#include "flipline/errors.hpp"
#include "flipline/kinetics.hpp"
#include "flipline/oracle.hpp"
#include "flipline/semiclassics.hpp"
#include "support.hpp"

using namespace flipline;
using Mat = Eigen::MatrixXd;

namespace {

// g-hat from dense Q and P built out of a lowering matrix in a basis four
// states larger than N, then cropped: products up to fourth order are exact
// on the retained block. Q = i sqrt(lambda/2)(a - a^dag), P = sqrt(lambda/2)(a + a^dag);
// the matrices are complex in the a basis, so the comparison uses the b = -i a
// basis, where Q = -sqrt(lambda/2)(b + b^dag) and P = i sqrt(lambda/2)(b - b^dag).
Mat reference_hamiltonian(const ModelParams& p, int N, double mu) {
    const int M = N + 4;
    Eigen::MatrixXcd b = Eigen::MatrixXcd::Zero(M, M);
    for (int n = 1; n < M; ++n) b(n - 1, n) = std::sqrt(double(n));
    const double s = std::sqrt(0.5 * p.lambda);
    const std::complex<double> I(0.0, 1.0);
    const Eigen::MatrixXcd Q = -s * (b + b.adjoint());
    const Eigen::MatrixXcd P = I * s * (b - b.adjoint());
    const Eigen::MatrixXcd one = Eigen::MatrixXcd::Identity(M, M);
    const Eigen::MatrixXcd R = Q * Q + P * P - mu * one;
    const Eigen::MatrixXcd H = 0.25 * R * R + 0.5 * (P * P - Q * Q) - 0.25 * mu * mu * one - p.alpha_d * Q;
    const Eigen::MatrixXcd crop = H.topLeftCorner(N, N);
    CHECK(crop.imag().cwiseAbs().maxCoeff() < 1e-12);
    return crop.real();
}

}  // namespace

TEST_CASE("Hamiltonian matches a dense operator-product construction") {
    std::mt19937_64 rng(51);
    for (int i = 0; i < 20; ++i) {
        const auto p = testsupport::random_params(rng);
        for (auto c : {DetuningConvention::Bare, DetuningConvention::Renormalized}) {
            const double mu = c == DetuningConvention::Bare ? p.mu : p.mu + 2.0 * p.lambda;
            const Mat H = oracle_hamiltonian(p, 40, c);
            CHECK((H - reference_hamiltonian(p, 40, mu)).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
        }
    }
    CHECK_THROWS_AS(oracle_hamiltonian({0.2, 0.1, 0.05, 0.01}, 1, DetuningConvention::Bare), Error);
}

TEST_CASE("spectrum at mu = 0.2, alpha_d = 0.1, lambda = 0.05") {
    const ModelParams p{0.2, 0.1, 0.05, 0.01};
    const auto s = build_and_diagonalize(p);
    CHECK(s.max_tail < 1e-12);
    CHECK(s.convergence_shift < 1e-10);
    CHECK(s.dimension % 50 == 0);
    for (std::size_t k = 1; k < s.eigenvalues.size(); ++k) CHECK(s.eigenvalues[k] >= s.eigenvalues[k - 1]);
    // Ground state near g_min + lambda omega / 2, up to O(lambda^2).
    const auto geo = stationary_points(p);
    const double gmin = geo.g_min[1];
    const double omega0 = action_and_period(p, gmin + 1e-7, WellId::right()).omega;
    CHECK(std::abs(s.eigenvalues[0] - (gmin + 0.5 * p.lambda * omega0)) < p.lambda * p.lambda);
    // Labelled states sit on their side of Q.
    for (std::size_t k = 0; k < s.eigenvalues.size(); ++k) {
        if (s.well_labels[k] == StateLabel::Right) CHECK(s.q_expect[k] > 0.0);
        if (s.well_labels[k] == StateLabel::Left) CHECK(s.q_expect[k] < 0.0);
    }
    CHECK(s.classification_margin >= 0.1);
    // Fixed small N fails the tail test.
    OracleOptions small;
    small.N = 60;
    try {
        build_and_diagonalize(p, small);
        FAIL("expected TruncationInsufficient");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TruncationInsufficient);
    }
}

TEST_CASE("symmetric wells give tunnel doublets") {
    const ModelParams p{0.4, 0.0, 0.05, 0.01};
    const auto s = build_and_diagonalize(p);
    const auto L = well_states(s, WellId::left()), R = well_states(s, WellId::right());
    REQUIRE(L.size() == R.size());
    REQUIRE(L.size() >= 3);
    const double spacing = s.eigenvalues[R[1]] - s.eigenvalues[R[0]];
    for (std::size_t k = 0; k + 1 < L.size(); ++k)
        CHECK(std::abs(s.eigenvalues[L[k]] - s.eigenvalues[R[k]]) < 1e-3 * spacing);
    const auto rep = level_alignment(p, s);
    CHECK(rep.max_mismatch < 1e-3);
}

TEST_CASE("exact localization of the ground state") {
    OracleOptions o;
    o.convention = DetuningConvention::Renormalized;
    {
        const ModelParams p{0.2, 0.2, 0.05, 0.01};
        const auto s = build_and_diagonalize(p, o);
        const auto sh = well_states(s, shallow_well(p.alpha_d));
        REQUIRE(sh.size() >= 2);
        CHECK(s.lowering_elements(sh[1], sh[0]) < 1e-10);
        const auto dp = well_states(s, deep_well(p.alpha_d));
        CHECK(s.lowering_elements(dp[1], dp[0]) > 1e-3);
    }
    {
        // mu + sigma alpha_d = 0 for both wells.
        const ModelParams p{0.0, 0.0, 0.05, 0.01};
        const auto s = build_and_diagonalize(p, o);
        for (WellId w : {WellId::left(), WellId::right()}) {
            const auto st = well_states(s, w);
            REQUIRE(st.size() >= 2);
            CHECK(s.lowering_elements(st[1], st[0]) < 1e-10);
        }
    }
}

TEST_CASE("ladder counts of the exact spectrum differ by alpha_d / lambda") {
    const ModelParams p{0.2, 0.1, 0.05, 0.01};
    const auto s = build_and_diagonalize(p);
    const int deep = int(well_states(s, WellId::right()).size());
    int shallow = 0;
    const double gs = stationary_points(p).g_s;
    for (int k : well_states(s, WellId::left()))
        if (s.eigenvalues[k] < gs) ++shallow;
    int deep_below = 0;
    for (int k : well_states(s, WellId::right()))
        if (s.eigenvalues[k] < gs) ++deep_below;
    CHECK(deep >= deep_below);
    CHECK(deep_below - shallow == 2);
}

TEST_CASE("intrawell spacing approaches lambda omega as lambda^2") {
    // Ground spacing of the deep well against lambda omega at the midpoint.
    auto err = [](double lambda) {
        const ModelParams p{0.3, 0.07, lambda, 0.01};
        OracleOptions o;
        o.max_N = 2500;
        const auto s = build_and_diagonalize(p, o);
        const auto st = well_states(s, WellId::right());
        const double e0 = s.eigenvalues[st[0]], e1 = s.eigenvalues[st[1]];
        const double w = action_and_period(p, 0.5 * (e0 + e1), WellId::right()).omega;
        return std::abs((e1 - e0) - lambda * w) / (lambda * w);
    };
    const double e1 = err(0.025), e2 = err(0.0125);
    CHECK(e1 / e2 >= 3.0);
    CHECK(e1 / e2 <= 5.0);
}

TEST_CASE("lowering elements decay in |m| at the pole exponent") {
    // Elements <c-k|a|c+k> share the midpoint level c; successive k differ by
    // two in m, so half the log ratio is the per-step decay Im(omega tau*).
    struct Case {
        ModelParams p;
        int kmax;
    };
    for (const Case& c : {Case{{0.6, 0.2, 0.05, 0.01}, 2}, Case{{0.3, 0.07, 0.025, 0.01}, 3}}) {
        const auto s = build_and_diagonalize(c.p);
        const auto ws = well_states(s, deep_well(c.p.alpha_d));
        const int mid = int(ws.size()) / 2;
        const auto od = orbit_data(c.p, s.eigenvalues[ws[mid]]);
        const double rate = (od.omega * od.tau_star).imag();
        const auto& M = s.lowering_elements;
        for (int k = 1; k <= c.kmax; ++k) {
            REQUIRE(mid + k + 1 < int(ws.size()));
            const double r = 0.5 * std::log(M(ws[mid - k], ws[mid + k]) / M(ws[mid - k - 1], ws[mid + k + 1]));
            CHECK(r == doctest::Approx(rate).epsilon(0.10));
        }
    }
}

TEST_CASE("lowering elements agree with the semiclassical Fourier components") {
    const ModelParams p{0.2, 0.1, 0.05, 0.01};
    const auto s = build_and_diagonalize(p);
    const auto geo = stationary_points(p);
    const WellId w = WellId::right();
    const auto st = well_states(s, w);
    const auto lad = quantize_well(p, w);
    int compared = 0;
    for (std::size_t n = 0; n < lad.levels.size() && n < st.size(); ++n)
        for (int m : {-2, -1, 1, 2}) {
            const int k = int(n) + m;
            if (k < 0 || k >= int(lad.levels.size()) || k >= int(st.size())) continue;
            const double gm = 0.5 * (lad.levels[n].g + lad.levels[k].g);
            if (lad.levels[n].g > geo.g_s - 3.0 * p.lambda * lad.levels[n].omega) continue;
            if (std::abs(gm - geo.g_c) < 1e-3) continue;
            const double exact = s.lowering_elements(st[k], st[n]);
            const double sc = std::abs(fourier_matrix_element(p, gm, m, w).value);
            CHECK(sc == doctest::Approx(exact).epsilon(0.05));
            ++compared;
        }
    CHECK(compared >= 2);
}

TEST_CASE("level alignment follows the action offset") {
    const double lambda = 0.05;
    {
        const ModelParams p{0.2, 2.0 * lambda, lambda, 0.01};
        const auto rep = level_alignment(p, build_and_diagonalize(p));
        REQUIRE(!rep.pairs.empty());
        CHECK(rep.median_mismatch < 0.05);
    }
    {
        const ModelParams p{0.2, 1.5 * lambda, lambda, 0.01};
        const auto rep = level_alignment(p, build_and_diagonalize(p));
        REQUIRE(!rep.pairs.empty());
        CHECK(rep.median_mismatch > 0.30);
    }
}

TEST_CASE("Pauli steady state") {
    const ModelParams p{0.2, 0.07, 0.05, 0.01};
    const auto s = build_and_diagonalize(p);
    const auto r = pauli_steady_state(s, p.kappa);
    double sum = 0.0;
    for (double x : r.rho) {
        CHECK(x >= 0.0);
        sum += x;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.slowest_rate > 0.0);
    CHECK(r.slowest_rate < 1e-3 * p.kappa);
    CHECK_FALSE(r.resonant_window);
    // Linear in kappa.
    const auto r2 = pauli_steady_state(s, 2.0 * p.kappa);
    CHECK(r2.slowest_rate == doctest::Approx(2.0 * r.slowest_rate).epsilon(1e-8));
    for (std::size_t k = 0; k < r.rho.size(); ++k) CHECK(r2.rho[k] == doctest::Approx(r.rho[k]).epsilon(1e-8));
    // Populations fall off up each ladder.
    for (WellId w : {WellId::left(), WellId::right()}) {
        const auto st = well_states(s, w);
        for (std::size_t k = 1; k < st.size(); ++k) CHECK(r.rho[st[k]] < r.rho[st[k - 1]]);
    }
    CHECK(pauli_steady_state(build_and_diagonalize({0.2, 0.1, 0.05, 0.01}), 0.01).resonant_window);
    CHECK_THROWS_AS(pauli_steady_state(s, 0.0), Error);
}
