#include "flipline/landscape.hpp"

#include <algorithm>
#include <cmath>

#include "flipline/errors.hpp"
#include "flipline/numerics.hpp"

namespace flipline {

bool LandscapeGeometry::has_well(WellId w) const { return !std::isnan(q_min[well_index(w)]); }
double LandscapeGeometry::qmin(WellId w) const { return q_min[well_index(w)]; }
double LandscapeGeometry::gmin(WellId w) const { return g_min[well_index(w)]; }

double eval_g(const ModelParams& p, double Q, double P) {
    const double r = Q * Q + P * P - p.mu;
    return 0.25 * r * r + 0.5 * (P * P - Q * Q) - 0.25 * p.mu * p.mu - p.alpha_d * Q;
}

double dg_dQ(const ModelParams& p, double Q, double P) {
    return Q * (Q * Q + P * P - p.mu) - Q - p.alpha_d;
}

CriticalQuasienergy critical_quasienergy(const ModelParams& p) {
    const double a = 1.0 - p.mu;
    return {-0.25 * (a * a - p.alpha_d * p.alpha_d), -0.5 * p.alpha_d};
}

double bifurcation_amplitude(double mu) {
    if (mu < -1.0) throw Error(ErrorKind::DomainError, "bifurcation amplitude needs mu >= -1");
    return 2.0 * std::pow((1.0 + mu) / 3.0, 1.5);
}

namespace {

double polish_cubic(double x, const ModelParams& p) {
    for (int it = 0; it < 4; ++it) {
        const double f = x * x * x - (p.mu + 1.0) * x - p.alpha_d;
        const double d = 3.0 * x * x - (p.mu + 1.0);
        if (d == 0.0) break;
        x -= f / d;
    }
    return x;
}

}  // namespace

LandscapeGeometry stationary_points(const ModelParams& p, double root_tol) {
    if (p.mu > 2.0)
        throw Error(ErrorKind::DomainError,
                    "mu > 2: stationary points of g no longer form the two-well structure");
    if (p.mu <= -1.0) throw Error(ErrorKind::DomainError, "mu <= -1 has no parametric wells");

    LandscapeGeometry geo;
    auto cq = critical_quasienergy(p);
    geo.g_c = cq.g_c;
    geo.q_c = cq.q_c;
    geo.alpha_B = bifurcation_amplitude(p.mu);

    auto roots = num::poly_roots({-p.alpha_d, -(p.mu + 1.0), 0.0, 1.0});
    std::sort(roots.begin(), roots.end(),
              [](auto a, auto b) { return std::abs(a.imag()) < std::abs(b.imag()); });
    const double scale = std::sqrt(p.mu + 1.0);
    // The discriminant decides the root count; imaginary parts of a near-double
    // pair are only O(sqrt(eps)) reliable.
    const double disc = 4.0 * std::pow(p.mu + 1.0, 3) - 27.0 * p.alpha_d * p.alpha_d;
    if (disc > 0.0) {
        std::array<double, 3> r{roots[0].real(), roots[1].real(), roots[2].real()};
        for (auto& x : r) x = polish_cubic(x, p);
        std::sort(r.begin(), r.end());
        const bool degenerate = r[1] - r[0] < 1e-10 * scale || r[2] - r[1] < 1e-10 * scale;
        if (!degenerate) {
            geo.regime = Regime::DoubleWell;
            geo.q_min = {r[0], r[2]};
            geo.q_s = r[1];
            geo.g_min = {eval_g(p, r[0], 0.0), eval_g(p, r[2], 0.0)};
            geo.g_s = eval_g(p, r[1], 0.0);
            for (double q : r)
                if (std::abs(dg_dQ(p, q, 0.0)) > std::max(root_tol, 1e-13 * scale * scale * scale) * 10)
                    throw Error(ErrorKind::DomainError, "stationary point residual too large");
            return geo;
        }
    }
    // Single real root: the surviving minimum sits on the side favoured by the bias.
    double q = polish_cubic(roots[0].real(), p);
    if (disc > 0.0) {
        // Degenerate: the isolated simple root is the surviving minimum.
        std::array<double, 3> r{roots[0].real(), roots[1].real(), roots[2].real()};
        std::sort(r.begin(), r.end());
        q = (r[1] - r[0] < r[2] - r[1]) ? r[2] : r[0];
        q = polish_cubic(q, p);
    }
    const int idx = q > 0.0 ? 1 : 0;
    geo.q_min[idx] = q;
    geo.g_min[idx] = eval_g(p, q, 0.0);
    geo.regime = Regime::SingleWell;
    return geo;
}

LandscapeGeometry double_well_geometry(const ModelParams& p, double root_tol) {
    auto geo = stationary_points(p, root_tol);
    if (geo.regime != Regime::DoubleWell)
        throw Error(ErrorKind::SingleWellRegime,
                    "the stationary cubic has a single real root: only one well exists");
    return geo;
}

bool double_well_condition(const ModelParams& p, const LandscapeGeometry& geo) {
    if (geo.regime != Regime::DoubleWell) return false;
    const double lower = -1.0 + 3.0 * std::pow(std::abs(p.alpha_d) / 2.0, 2.0 / 3.0);
    // The upper edge is kept: there g_s = g_c and the barrier top is an
    // integrable logarithmic endpoint (mu = 1, alpha_d = 0).
    return lower < p.mu && p.mu <= geo.q_s * geo.q_s + 1.0 + 1e-9;
}

}  // namespace flipline
