#pragma once

#include <array>
#include <limits>

#include "flipline/params.hpp"

namespace flipline {

enum class Regime { DoubleWell, SingleWell };

struct LandscapeGeometry {
    static constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    // Indexed by well_index(sigma): [0] is sigma = -1, [1] is sigma = +1.
    // A missing well (single-well regime) carries NaN.
    std::array<double, 2> q_min{nan, nan};
    std::array<double, 2> g_min{nan, nan};
    double q_s = nan, g_s = nan;
    double g_c = nan, q_c = nan;
    double alpha_B = nan;
    Regime regime = Regime::SingleWell;

    bool has_well(WellId w) const;
    double qmin(WellId w) const;
    double gmin(WellId w) const;
};

inline int well_index(WellId w) { return w.sigma < 0 ? 0 : 1; }

// g(Q, P) = (Q^2 + P^2 - mu)^2 / 4 + (P^2 - Q^2) / 2 - mu^2 / 4 - alpha_d Q.
double eval_g(const ModelParams& p, double Q, double P);
double dg_dQ(const ModelParams& p, double Q, double P);

// Roots of Q^3 - (mu + 1) Q - alpha_d = 0 classified into minima and saddle.
// Never throws for a single real root; the regime field carries the signal.
// Throws DomainError for mu > 2 or mu <= -1.
LandscapeGeometry stationary_points(const ModelParams& p, double root_tol = 1e-12);

// As stationary_points but raises SingleWellRegime unless two wells exist.
LandscapeGeometry double_well_geometry(const ModelParams& p, double root_tol = 1e-12);

struct CriticalQuasienergy {
    double g_c;
    double q_c;
};
CriticalQuasienergy critical_quasienergy(const ModelParams& p);

// 2 [(1 + mu) / 3]^{3/2}; DomainError for mu < -1.
double bifurcation_amplitude(double mu);

// -1 + 3 (|alpha_d| / 2)^{2/3} < mu <= Q_s^2 + 1, evaluated on a computed geometry.
bool double_well_condition(const ModelParams& p, const LandscapeGeometry& geo);

}  // namespace flipline
