#pragma once

// Shared generators and independent oracles for the unit tests. Nothing here
// calls the library's orbit machinery: turning points come from bisection on
// g(Q, 0) and trajectories from a fixed-step RK4 in real time.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "flipline/landscape.hpp"
#include "flipline/params.hpp"

namespace testsupport {

using cplx = std::complex<double>;

inline constexpr int kSamples = 200;

struct Sample {
    flipline::ModelParams p;
    double g;
};

// Valid double-well parameters with |alpha_d| up to frac * alpha_B.
inline flipline::ModelParams random_params(std::mt19937_64& rng, double frac = 0.85) {
    std::uniform_real_distribution<double> umu(-0.6, 1.4), ua(-1.0, 1.0);
    for (;;) {
        flipline::ModelParams p;
        p.mu = umu(rng);
        p.alpha_d = ua(rng) * frac * flipline::bifurcation_amplitude(p.mu);
        p.lambda = 0.05;
        p.kappa = 0.01;
        const auto geo = flipline::stationary_points(p);
        if (!flipline::double_well_condition(p, geo)) continue;
        if (std::abs(p.alpha_d) < 1e-3) continue;
        return p;
    }
}

std::vector<double> real_turning_points(const flipline::ModelParams& p, double g);

// For mu > 1 orbits whose turning points fall inside Q^2 + P^2 = mu - 1 fold
// at a branch point; orbit operations reject them, so the generators do too.
inline bool single_branch_orbit(const flipline::ModelParams& p, double g) {
    if (p.mu <= 1.0) return true;
    for (double q : real_turning_points(p, g))
        if (q * q < p.mu - 1.0) return false;
    return true;
}

// g between g_lo and g_s, clear of the minima, the saddle and g_c.
inline double random_g(std::mt19937_64& rng, const flipline::ModelParams& p, double g_lo) {
    const auto geo = flipline::stationary_points(p);
    const double span = geo.g_s - g_lo;
    std::uniform_real_distribution<double> u(0.03, 0.97);
    for (int tries = 0; tries < 1000; ++tries) {
        const double g = g_lo + u(rng) * span;
        if (std::abs(g - geo.g_c) > 0.02 * span && single_branch_orbit(p, g)) return g;
    }
    return NAN;
}

// g in the overlap range, where both wells carry an orbit.
inline Sample random_overlap(std::mt19937_64& rng) {
    for (;;) {
        const auto p = random_params(rng);
        const auto geo = flipline::stationary_points(p);
        const double g = random_g(rng, p, std::max(geo.g_min[0], geo.g_min[1]));
        if (!std::isnan(g)) return {p, g};
    }
}

// g anywhere in the deep well below the saddle.
inline Sample random_deep(std::mt19937_64& rng) {
    for (;;) {
        const auto p = random_params(rng);
        const auto geo = flipline::stationary_points(p);
        const double g = random_g(rng, p, std::min(geo.g_min[0], geo.g_min[1]));
        if (!std::isnan(g)) return {p, g};
    }
}

inline double dg_dP(const flipline::ModelParams& p, double Q, double P) {
    return P * (Q * Q + P * P - p.mu) + P;
}

// Real roots of g(Q, 0) = g, ascending.
inline std::vector<double> real_turning_points(const flipline::ModelParams& p, double g) {
    auto f = [&](double q) { return flipline::eval_g(p, q, 0.0) - g; };
    std::vector<double> out;
    const int n = 20000;
    const double lo = -3.0, hi = 3.0;
    double a = lo, fa = f(a);
    for (int i = 1; i <= n; ++i) {
        const double b = lo + (hi - lo) * i / n, fb = f(b);
        if ((fa < 0) != (fb < 0)) {
            double x0 = a, x1 = b, f0 = fa;
            for (int it = 0; it < 200 && x1 - x0 > 1e-16; ++it) {
                const double m = 0.5 * (x0 + x1), fm = f(m);
                if ((fm < 0) == (f0 < 0)) {
                    x0 = m;
                    f0 = fm;
                } else {
                    x1 = m;
                }
            }
            out.push_back(0.5 * (x0 + x1));
        }
        a = b;
        fa = fb;
    }
    return out;
}

struct State {
    double Q, P;
};

inline State rk4_step(const flipline::ModelParams& p, State s, double h) {
    auto rhs = [&](State x) {
        return State{dg_dP(p, x.Q, x.P), -flipline::dg_dQ(p, x.Q, x.P)};
    };
    const State k1 = rhs(s);
    const State k2 = rhs({s.Q + 0.5 * h * k1.Q, s.P + 0.5 * h * k1.P});
    const State k3 = rhs({s.Q + 0.5 * h * k2.Q, s.P + 0.5 * h * k2.P});
    const State k4 = rhs({s.Q + h * k3.Q, s.P + h * k3.P});
    return {s.Q + h / 6 * (k1.Q + 2 * k2.Q + 2 * k3.Q + k4.Q), s.P + h / 6 * (k1.P + 2 * k2.P + 2 * k3.P + k4.P)};
}

// Real-time period of the orbit through (q0, 0): time of the second P = 0
// crossing, refined by secant on the last step length.
inline double return_time(const flipline::ModelParams& p, double q0, double h = 2e-4) {
    State s{q0, 0.0};
    double t = 0.0;
    int crossings = 0;
    // Leave the turning point before watching for sign changes.
    for (int i = 0; i < 10; ++i) {
        s = rk4_step(p, s, h);
        t += h;
    }
    for (;;) {
        const State n = rk4_step(p, s, h);
        if ((n.P < 0) != (s.P < 0) && n.P != 0.0) {
            if (++crossings == 2) {
                double d0 = 0.0, d1 = h, p0 = s.P, p1 = n.P;
                for (int it = 0; it < 60 && std::abs(d1 - d0) > 1e-16; ++it) {
                    const double d2 = d1 - p1 * (d1 - d0) / (p1 - p0);
                    d0 = d1;
                    p0 = p1;
                    d1 = d2;
                    p1 = rk4_step(p, s, d1).P;
                }
                return t + d1;
            }
        }
        s = n;
        t += h;
        if (t > 1e4) return NAN;
    }
}

// Fourier coefficients c_m = (1/M) sum a(t_k) exp(-i m omega t_k) of
// a = (P - iQ) / sqrt(2 lambda) over one period starting at (q0, 0).
inline std::vector<cplx> orbit_fourier(const flipline::ModelParams& p, double q0, double period,
                                       const std::vector<int>& ms, int M = 512, int sub = 16) {
    const double omega = 2.0 * M_PI / period, h = period / (M * sub);
    std::vector<cplx> c(ms.size(), 0.0);
    State s{q0, 0.0};
    for (int k = 0; k < M; ++k) {
        const double t = period * k / M;
        const cplx a = cplx(s.P, -s.Q) / std::sqrt(2.0 * p.lambda);
        for (std::size_t j = 0; j < ms.size(); ++j) c[j] += a * std::exp(cplx(0.0, -ms[j] * omega * t));
        for (int i = 0; i < sub; ++i) s = rk4_step(p, s, h);
    }
    for (auto& x : c) x /= double(M);
    return c;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testsupport
