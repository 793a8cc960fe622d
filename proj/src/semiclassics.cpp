#include "flipline/semiclassics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "flipline/errors.hpp"
#include "flipline/landscape.hpp"
#include "flipline/numerics.hpp"

namespace flipline {

namespace {
const std::complex<double> I1(0.0, 1.0);
}

LevelLadder quantize_well(const ModelParams& p, WellId well, const QuantizeOptions& opt) {
    validate(p);
    const auto geo = stationary_points(p, opt.tol.root);
    if (!geo.has_well(well)) throw Error(ErrorKind::OutsideWellRange, "requested well does not exist");
    LevelLadder out;
    out.well = well;
    const double g0 = geo.gmin(well);
    auto action = [&](double g) { return action_and_period(p, g, well, opt.tol).action; };

    double g_top, i_top;
    int n_max;
    if (geo.regime == Regime::DoubleWell) {
        // Orbit data are defined strictly below the saddle; the action is
        // continuous there, so its separatrix value is taken just below.
        g_top = geo.g_s - 1e-13 * (1.0 + std::abs(geo.g_s - g0));
        i_top = action(g_top);
        n_max = int(std::floor(i_top / p.lambda - 0.5));
        if (n_max < 0) throw Error(ErrorKind::NoBoundStates, "lambda / 2 exceeds the well action at the saddle");
    } else {
        n_max = opt.max_levels_single_well - 1;
        const double target = p.lambda * (n_max + 0.5);
        double span = 0.1;
        while (action(g0 + span) < target) span *= 2.0;
        g_top = g0 + span;
        i_top = action(g_top);
    }
    out.g_top = g_top;

    double lo = g0;
    for (int n = 0; n <= n_max; ++n) {
        const double target = p.lambda * (n + 0.5);
        if (target >= i_top) break;
        // Right at the bottom the turning points coalesce and the loop
        // integral is 0/0; the action there is below any target.
        const double floor_g = g0 + 1e-12 * (1.0 + std::abs(g0));
        auto f = [&](double g) { return g <= floor_g ? -target : action(g) - target; };
        const double gn = num::bracket_root(f, lo, g_top, 1e-15);
        const auto ap = action_and_period(p, gn, well, opt.tol);
        out.levels.push_back({n, gn, ap.action, ap.omega});
        lo = gn;
    }
    if (out.levels.empty()) throw Error(ErrorKind::NoBoundStates, "no level below the saddle");
    return out;
}

FourierElement fourier_matrix_element(const ModelParams& p, const OrbitData& od, int m, WellId well) {
    const double w = od.omega;
    const double pref = 1.0 / std::sqrt(2.0 * p.lambda);
    const bool shallow = role(well, p.alpha_d) == WellRole::Shallow;
    if (shallow && od.regime != OrbitRegime::DoubleWell)
        throw Error(ErrorKind::OutsideWellRange, "g is below the shallow-well minimum");
    FourierElement out;
    if (m == 0) {
        // The pole sum has no m = 0 term; the mean is the orbit average of
        // a = (P - iQ) / sqrt(2 lambda), and P averages to zero.
        out.value = -I1 * pref * od.mean_q[well_index(well)];
        return out;
    }
    std::complex<double> ts = od.tau_star, tss = od.tau_star_star;
    // The shifted poles give the orbit through the shallow well's inner
    // turning point up to an overall sign, fixed here so that both wells
    // share one phase convention.
    double sign = 1.0;
    if (shallow) {
        ts = od.tau_star_star - od.half_trip;
        tss = od.tau_star + od.half_trip;
        sign = -1.0;
    }
    const auto ps = w * ts, pss = w * tss, p2 = w * od.tau2;
    // Orbits of the mirrored problem are -Q(t), -P(t), so a changes sign.
    const double mirror = p.alpha_d < 0.0 ? -1.0 : 1.0;
    const double md = double(m);
    std::complex<double> num, den;
    if (m > 0) {
        // Multiply through by exp(i m phi2) so every exponential decays.
        num = std::exp(I1 * md * (p2 - ps)) - std::exp(I1 * md * (p2 - pss));
        den = std::exp(I1 * md * p2) - 1.0;
    } else {
        num = std::exp(-I1 * md * ps) - std::exp(-I1 * md * pss);
        den = 1.0 - std::exp(-I1 * md * p2);
    }
    if (std::abs(den) < 1e-10) {
        out.resonant = true;
        // m phi2 sits next to a multiple of 2 pi: expand the denominator in the
        // offset delta instead of subtracting two nearly equal exponentials.
        const double k = std::round(md * p2.real() / (2.0 * std::numbers::pi));
        const std::complex<double> x = I1 * (md * p2 - 2.0 * std::numbers::pi * k);
        den = m > 0 ? x + 0.5 * x * x : x - 0.5 * x * x;
    }
    out.value = sign * mirror * (-I1 * w * pref) * num / den;
    return out;
}

FourierElement fourier_matrix_element(const ModelParams& p, double g, int m, WellId well, const Tolerances& tol) {
    const auto od = orbit_data(p, g, tol);
    return fourier_matrix_element(p, od, m, well);
}

double RateTable::rate(int from, int to) const {
    auto it = entries.find({from, to});
    return it == entries.end() ? 0.0 : it->second;
}

RateTable transition_rates(const ModelParams& p, const LevelLadder& ladder, const RateOptions& opt) {
    validate(p);
    if (ladder.levels.empty()) throw Error(ErrorKind::NoBoundStates, "empty ladder");
    RateTable t;
    t.well = ladder.well;
    t.m_max = opt.m_max;
    t.kappa = p.kappa;
    const int n_levels = int(ladder.levels.size());
    double largest = 0.0;
    for (const auto& lv : ladder.levels) {
        for (int m = -opt.m_max; m <= opt.m_max; ++m) {
            if (m == 0) continue;
            const int to = lv.n + m;
            if (to < 0 || to >= n_levels) continue;
            const double gm =
                opt.point == RatePoint::Midpoint ? 0.5 * (lv.g + ladder.levels[to].g) : lv.g;
            const auto od = orbit_data(p, gm, ladder.well, opt.tol);
            const auto a = fourier_matrix_element(p, od, m, ladder.well);
            const double w = 2.0 * p.kappa * std::norm(a.value);
            t.entries[{lv.n, to}] = w;
            largest = std::max(largest, w);
        }
    }
    for (auto& [key, w] : t.entries)
        if (w < opt.relative_floor * largest) w = 0.0;
    return t;
}

double detailed_balance_ratio(const ModelParams& p, double g, int m, const Tolerances& tol) {
    if (m < 0) throw Error(ErrorKind::DomainError, "detailed-balance ratio needs m >= 0");
    if (m == 0) return 1.0;
    const auto od = orbit_data(p, g, tol);
    const double im = (od.tau_star_star + od.tau_star - od.tau2).imag() * od.omega;
    return std::exp(2.0 * m * im);
}

}  // namespace flipline
