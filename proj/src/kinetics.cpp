#include "flipline/kinetics.hpp"

#include <algorithm>
#include <cmath>

#include "flipline/complex_orbits.hpp"
#include "flipline/landscape.hpp"
#include "flipline/numerics.hpp"

namespace flipline {

namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

// Integral of R' over [a, b] where one end sits at g_c. side = +1 when the
// singular end is the lower limit. g = g_c + side e^{-u}; beyond u = U the
// integrand R' e^{-u} is fitted as C e^{(k - 1) u} from the last two samples,
// which covers both the logarithmic growth of R' and the |g - g_c|^{-1/4}
// growth at a degenerate saddle (g_s = g_c). U backs off when rounding makes
// R' unevaluable that close to g_c.
double integrate_log_end(const ModelParams& p, double gc, double other, int side,
                         const ActivationOptions& opt) {
    auto rp = [&](double u) { return r_prime(p, gc + side * std::exp(-u), opt.tol); };
    const double u0 = -std::log(std::abs(other - gc));
    double U = std::max(opt.log_window, u0 + 1.0);
    double r1 = 0.0, r0 = 0.0;
    for (;;) {
        try {
            r1 = rp(U);
            r0 = rp(U - 1.0);
            break;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::QuadratureFailure && e.kind() != ErrorKind::CriticalPoint) throw;
            if (U - 1.0 < u0 + 1.0 || U < 8.0) throw;
            U -= 1.0;
        }
    }
    double body = 0.0;
    if (u0 < U)
        body = num::integrate([&](double u) { return rp(u) * std::exp(-u); }, u0, U, opt.outer_rel);
    const double k = std::clamp(std::log(r1 / r0), 0.0, 0.9);
    return body + r1 * std::exp(-U) / (1.0 - k);
}

}  // namespace

double r_prime(const ModelParams& p, double g, const Tolerances& tol) {
    auto direct = [&](double x) {
        const OrbitData od = orbit_data(p, x, tol);
        return 2.0 * (od.tau2 - od.tau_star - od.tau_star_star).imag();
    };
    // At the shallow minimum Im tau2 and Im tau** diverge together while R'
    // stays smooth; bridge the point with a symmetric average (error O(h^2)).
    const LandscapeGeometry geo = stationary_points(p, tol.root);
    if (geo.regime == Regime::DoubleWell) {
        const double gsh = geo.gmin(shallow_well(p.alpha_d));
        // Narrower than the well itself near the bifurcation point.
        const double h = std::min(1e-6 * (1.0 + std::abs(gsh)), 1e-3 * (geo.g_s - gsh));
        if (p.alpha_d != 0.0 && std::abs(g - gsh) < h) {
            const double lo = direct(gsh - h), hi = direct(gsh + h);
            return lo + (hi - lo) * (g - (gsh - h)) / (2.0 * h);
        }
    }
    return direct(g);
}

double r_prime_minus_sheet(const ModelParams& p, double g, const Tolerances& tol) {
    return 2.0 * orbit_data(p, g, tol).tau_minus.imag();
}

bool is_localization_point(const ModelParams& p, WellId well) {
    const LandscapeGeometry geo = stationary_points(p);
    if (!geo.has_well(well)) throw Error(ErrorKind::OutsideWellRange, "requested well does not exist");
    const double q = geo.qmin(well);
    // A_P = A_Q exactly when Q_min^2 = 1, which is g_min = g_c.
    return std::abs(q * q - 1.0) < 1e-9;
}

double r_prime_at_minimum(const ModelParams& p, WellId well) {
    const LandscapeGeometry geo = stationary_points(p);
    if (!geo.has_well(well)) throw Error(ErrorKind::OutsideWellRange, "requested well does not exist");
    if (is_localization_point(p, well))
        throw Error(ErrorKind::LocalizationPoint, "g_c coincides with the bottom of the well");
    const double q2 = geo.qmin(well) * geo.qmin(well);
    const double ap = q2 - p.mu + 1.0, aq = 3.0 * q2 - p.mu - 1.0;
    const double sp = std::sqrt(ap), sq = std::sqrt(aq);
    return 2.0 / (sp * sq) * std::log((sp + sq) / std::abs(sp - sq));
}

double integrate_r_prime(const ModelParams& p, double a, double b, const ActivationOptions& opt) {
    if (a == b) return 0.0;
    if (a > b) return -integrate_r_prime(p, b, a, opt);
    const LandscapeGeometry geo = stationary_points(p, opt.tol.root);
    const double gc = geo.g_c;
    std::vector<double> pts{a, b};
    for (double x : {gc, geo.g_min[0], geo.g_min[1]})
        if (std::isfinite(x) && x > a && x < b && !near(x, a) && !near(x, b)) pts.push_back(x);
    std::sort(pts.begin(), pts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double lo = pts[i], hi = pts[i + 1];
        if (near(lo, gc))
            total += integrate_log_end(p, gc, hi, +1, opt);
        else if (near(hi, gc))
            total += integrate_log_end(p, gc, lo, -1, opt);
        else
            total += num::integrate([&](double g) { return r_prime(p, g, opt.tol); }, lo, hi, opt.outer_rel);
    }
    return total;
}

double activation_energy(const ModelParams& p, WellId well, const ActivationOptions& opt) {
    const LandscapeGeometry geo = double_well_geometry(p, opt.tol.root);
    return integrate_r_prime(p, geo.gmin(well), geo.g_s, opt);
}

double delta_activation(const ModelParams& p, const ActivationOptions& opt) {
    const LandscapeGeometry geo = double_well_geometry(p, opt.tol.root);
    return integrate_r_prime(p, geo.g_min[1], geo.g_min[0], opt);
}

std::vector<double> stationary_distribution(const std::vector<std::vector<double>>& W) {
    const std::size_t n = W.size();
    if (n == 0) throw Error(ErrorKind::NullSpaceDegenerate, "empty rate matrix");
    std::vector<std::vector<double>> q = W;
    std::vector<double> out_rate(n, 0.0);
    double scale = 0.0;
    for (auto& row : W)
        for (double x : row) scale = std::max(scale, x);
    for (std::size_t k = n - 1; k >= 1; --k) {
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += q[k][j];
        if (!(s > 1e-300 * std::max(scale, 1e-300)) || !(s > 0.0))
            throw Error(ErrorKind::NullSpaceDegenerate,
                        "state " + std::to_string(k) + " has no path back; stationary state is not unique");
        out_rate[k] = s;
        for (std::size_t i = 0; i < k; ++i) {
            if (q[i][k] == 0.0) continue;
            const double f = q[i][k] / s;
            for (std::size_t j = 0; j < k; ++j)
                if (j != i) q[i][j] += f * q[k][j];
        }
    }
    std::vector<double> pi(n, 0.0);
    pi[0] = 1.0;
    for (std::size_t k = 1; k < n; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += pi[i] * q[i][k];
        pi[k] = acc / out_rate[k];
    }
    double sum = 0.0;
    for (double x : pi) sum += x;
    for (double& x : pi) x /= sum;
    return pi;
}

DistributionProfile quasistationary_distribution(const ModelParams& p, const LevelLadder& ladder,
                                                 const RateTable& rates, const ActivationOptions& opt) {
    if (is_localization_point(p, ladder.well))
        throw Error(ErrorKind::LocalizationPoint,
                    "g_c coincides with the bottom of the well; the ground state does not relax");
    if (rates.well.sigma != ladder.well.sigma)
        throw Error(ErrorKind::ValidationError, "rate table and ladder refer to different wells");
    const auto& lv = ladder.levels;
    const std::size_t n = lv.size();
    DistributionProfile d;
    d.well = ladder.well;
    if (n == 0) throw Error(ErrorKind::NoBoundStates, "empty ladder");

    const double g0 = stationary_points(p, opt.tol.root).gmin(ladder.well);
    double R = 0.0, prev = g0;
    for (const Level& l : lv) {
        R += integrate_r_prime(p, prev, l.g, opt);
        prev = l.g;
        d.R.push_back(R);
        d.samples.push_back({l.g, r_prime(p, l.g, opt.tol)});
    }
    // Weights relative to the ground level keep the exponentials in range.
    double sum = 0.0;
    for (double r : d.R) sum += std::exp(-(r - d.R[0]) / p.lambda);
    d.normalization = std::exp(d.R[0] / p.lambda) / sum;
    for (double r : d.R) d.rho.push_back(std::exp(-(r - d.R[0]) / p.lambda) / sum);

    std::vector<std::vector<double>> W(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) W[i][j] = rates.rate(lv[i].n, lv[j].n);
    d.rho_balance = stationary_distribution(W);

    // Pairs within one level spacing of g_c are skipped: R' diverges there
    // and neither route resolves it on the level grid.
    const double gc = stationary_points(p, opt.tol.root).g_c;
    auto near_gc = [&](const Level& l) { return std::abs(l.g - gc) < p.lambda * l.omega; };
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if ((lv[i].g - gc) * (lv[i + 1].g - gc) <= 0.0 || near_gc(lv[i]) || near_gc(lv[i + 1])) continue;
        const double dg = lv[i + 1].g - lv[i].g;
        const double s_int = std::log(d.rho[i + 1] / d.rho[i]) / dg;
        const double s_bal = std::log(d.rho_balance[i + 1] / d.rho_balance[i]) / dg;
        d.max_slope_discrepancy = std::max(d.max_slope_discrepancy, std::abs(s_bal - s_int) / std::abs(s_int));
        ++d.compared_pairs;
    }
    return d;
}

double log_susceptibility(double mu) {
    if (!(mu > -1.0)) throw Error(ErrorKind::DomainError, "mu must exceed -1");
    if (std::abs(mu) < 0.05)
        throw Error(ErrorKind::DomainError, "perturbative susceptibility is invalid for |mu| < 0.05");
    const double s = 2.0 * std::sqrt(1.0 + mu);
    return 0.5 * std::log((mu + 2.0 + s) / (mu + 2.0 - s));
}

double prebifurcation_activation(double mu, double delta_alpha) {
    if (!(delta_alpha < 0.0)) throw Error(ErrorKind::DomainError, "delta_alpha must be negative");
    if (!(mu > -1.0 && mu < 2.0)) throw Error(ErrorKind::DomainError, "mu must lie in (-1, 2)");
    return 8.0 / (2.0 - mu) * std::pow(-delta_alpha, 1.5) / std::pow(3.0 * (1.0 + mu), 0.25);
}

double area_formula_rprime(const ModelParams& p, double g, WellId well, const Tolerances& tol) {
    const TurningPoints tp = turning_points(p, g, tol.root);
    const LandscapeGeometry geo = stationary_points(p, tol.root);
    int lo = 2;
    if (tp.n_real == 4) {
        if (well.sigma < 0) lo = 0;
    } else if (!geo.has_well(well) || (geo.regime == Regime::DoubleWell && well.sigma != deep_well(p.alpha_d).sigma)) {
        throw Error(ErrorKind::OutsideWellRange, "no orbit of the requested well at this g");
    }
    const double a = tp.q[lo].real(), b = tp.q[lo + 1].real();
    const cplx o1 = tp.q[lo == 0 ? 2 : 0], o2 = tp.q[lo == 0 ? 3 : 1];
    // P^2 = -F(Q) / D_+(Q), F the turning-point quartic; on (a, b) the
    // remaining factor (Q - o1)(Q - o2) is positive.
    auto ratio = [&](double Q) {
        const double rest = std::abs((Q - o1) * (Q - o2));
        const double qc = -0.5 * p.alpha_d;
        const double gc = critical_quasienergy(p).g_c;
        const double Bq = 4.0 * ((Q - qc) * (Q - qc) + (g - gc));
        const double dplus = Q * Q + 1.0 - p.mu + std::sqrt(std::max(Bq, 0.0));
        return rest / dplus;
    };
    const double M = 2.0 * num::integrate_arc(
        [&](double Q, double da, double db) { return da * db * std::sqrt(ratio(Q)); }, a, b, tol.quad_rel);
    const double N = num::integrate_arc(
        [&](double Q, double da, double db) {
            const double r = ratio(Q), w = da * db;
            return 2.0 * (2.0 * Q * Q - p.mu) * w * std::sqrt(r) + 4.0 / 3.0 * w * w * r * std::sqrt(r);
        },
        a, b, tol.quad_rel);
    return 2.0 * M / N;
}

std::vector<int> resonance_offsets(const ModelParams& p, double window) {
    std::vector<int> out;
    const int m = static_cast<int>(std::lround(p.alpha_d / p.lambda));
    for (int k = m - 1; k <= m + 1; ++k)
        if (std::abs(p.alpha_d - k * p.lambda) < window) out.push_back(k);
    return out;
}

ActivationResult switching_rate_estimate(const ModelParams& p, const ActivationOptions& opt) {
    ActivationResult r;
    r.R_A[0] = activation_energy(p, WellId::left(), opt);
    r.R_A[1] = activation_energy(p, WellId::right(), opt);
    const int deep = well_index(deep_well(p.alpha_d));
    r.delta_R_A = r.R_A[deep] - r.R_A[1 - deep];
    r.population_ratio_exponent = (r.R_A[1] - r.R_A[0]) / p.lambda;
    r.prefactor_estimate = p.kappa;
    for (int i = 0; i < 2; ++i) {
        r.switching_exponent[i] = r.R_A[i] / p.lambda;
        r.switching_rate[i] = p.kappa * std::exp(-r.switching_exponent[i]);
    }
    return r;
}

}  // namespace flipline
