#pragma once

#include <array>
#include <complex>
#include <limits>
#include <vector>

#include "flipline/landscape.hpp"
#include "flipline/params.hpp"

namespace flipline {

using cplx = std::complex<double>;

enum class BranchState { ComplexPair, RealPair, Degenerate };

// Which integration contours apply at a given g.
enum class OrbitRegime {
    DoubleWell,  // g above both minima: four real turning points
    SingleWell,  // only the deep well is classically allowed at this g
};

struct TurningPoints {
    // Real roots are ordered left to right. With two real roots they are q3 < q4
    // (deep well) and q1 = conj(q2) with Im q1 > 0.
    std::array<cplx, 4> q;
    cplx q_plus, q_minus;
    BranchState branch_state = BranchState::ComplexPair;
    int n_real = 0;
};

enum class Sheet { Plus, Minus };

struct ActionPeriod {
    double action;
    double tau1;
    double omega;
};

struct PolePositions {
    cplx tau_star;
    cplx tau_star_star;
};

struct OrbitData {
    double g = 0.0;
    WellId well{1};
    OrbitRegime regime = OrbitRegime::DoubleWell;
    BranchState branch_state = BranchState::ComplexPair;
    double action = 0.0;
    double tau1 = 0.0;
    double omega = 0.0;
    // Pole and period data anchored at the deep-well turning point q3 at t = 0,
    // real parts reduced to [0, tau1).
    cplx tau2;
    cplx tau_star;
    cplx tau_star_star;
    // Travel time between the wells (tau2 / 2 when g > g_c); its real part is
    // tau1 / 2 when the contour detours around real branch points.
    cplx half_trip;
    // Full-line integral on the minus sheet of P; 2 Im tau_minus = R'(g).
    cplx tau_minus;
    // Time average of Q over the real orbit, indexed like LandscapeGeometry
    // (sigma = -1, +1); NaN for a well without an orbit at this g.
    std::array<double, 2> mean_q{std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN()};
};

double reduce_mod(double x, double period);

TurningPoints turning_points(const ModelParams& p, double g, double root_tol = 1e-12);

// P(Q|g) on the requested sheet. B^{1/2} is the principal root of B(Q), so it is
// positive on the real axis where B > 0 and i sqrt(-B) on a real segment where
// B < 0. P = -i sqrt(-P^2) with the principal root: real positive on classically
// allowed real intervals and Im P < 0 on forbidden ones.
cplx momentum_branch(const ModelParams& p, double g, cplx Q, Sheet sheet);

// Action and period of the requested well at quasienergy g.
ActionPeriod action_and_period(const ModelParams& p, double g, WellId well,
                               const Tolerances& tol = {});

// Central finite difference of the action; equals 1 / omega.
double action_derivative(const ModelParams& p, double g, WellId well, double step = 1e-6,
                         const Tolerances& tol = {});

cplx complex_period(const ModelParams& p, double g, const Tolerances& tol = {});
PolePositions pole_positions(const ModelParams& p, double g, const Tolerances& tol = {});

// All period and pole data in one pass; well selects action/period.
OrbitData orbit_data(const ModelParams& p, double g, WellId well, const Tolerances& tol = {});
OrbitData orbit_data(const ModelParams& p, double g, const Tolerances& tol = {});

// Range of g where intrawell orbits of the well exist (g_min(well), upper), with
// upper = g_s in the double-well regime and +inf otherwise.
std::array<double, 2> orbit_range(const ModelParams& p, WellId well);

struct TrajectorySample {
    cplx t;
    cplx Q;
    cplx P;
};

// Samples the Hamiltonian flow along t in [tau0, tau0 + tau1], starting from the
// deep-well turning point q3 at t = 0. n_samples >= 2 includes both ends.
std::vector<TrajectorySample> integrate_orbit(const ModelParams& p, double g, cplx tau0,
                                              int n_samples, const Tolerances& tol = {});

// Flow along an explicit straight segment from (Q0, P0) at t0 to t1.
TrajectorySample propagate(const ModelParams& p, cplx Q0, cplx P0, cplx t0, cplx t1,
                           const Tolerances& tol = {});

// (1 / 2 pi) of the integral of P dQ/dt over one real period starting at the
// complex time tau.
double action_of_imag_time(const ModelParams& p, double g, cplx tau, const Tolerances& tol = {});

}  // namespace flipline
