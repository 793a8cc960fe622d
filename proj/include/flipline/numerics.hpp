#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "flipline/errors.hpp"

namespace flipline::num {

using cplx = std::complex<double>;

// Roots of sum_k c[k] x^k (c.back() != 0) from the companion matrix, each
// polished by Newton steps on the original polynomial.
std::vector<cplx> poly_roots(const std::vector<double>& coeffs);

cplx poly_eval(const std::vector<double>& coeffs, cplx x);

// Adaptive 15-point Gauss-Kronrod on [a, b]. Nodes never touch the endpoints,
// so integrable endpoint singularities only need to be bounded after mapping.
// A singularity just outside an endpoint (branch point next to a turning
// point) defeats plain bisection and inflates the Kronrod error estimate; the
// fallback grades the mesh geometrically toward both ends and also accepts
// agreement between the two meshes.
template <class F>
auto integrate(F&& f, double a, double b, double rel_tol) {
    using R = decltype(f(a));
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    auto converged = [&](double err, double l1) { return err <= 1e4 * rel_tol * l1 + 1e-300 || err <= 1e-12; };
    double err = 0.0, l1 = 0.0;
    R val = GK::integrate(f, a, b, 15, rel_tol, &err, &l1);
    if (std::isfinite(std::abs(val)) && converged(err, l1)) return val;

    constexpr int levels = 40;
    std::vector<double> cuts;
    const double half = 0.5 * (b - a);
    for (int k = levels; k >= 1; --k) cuts.push_back(a + half * std::ldexp(1.0, -2 * k));
    cuts.push_back(a + half);
    for (int k = 1; k <= levels; ++k) cuts.push_back(b - half * std::ldexp(1.0, -2 * k));
    R total = GK::integrate(f, a, cuts.front(), 10, rel_tol, &err, &l1);
    double err_sum = err, l1_sum = l1;
    cuts.push_back(b);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        total += GK::integrate(f, cuts[i], cuts[i + 1], 10, rel_tol, &err, &l1);
        err_sum += err;
        l1_sum += l1;
    }
    if (!std::isfinite(std::abs(total)))
        throw Error(ErrorKind::QuadratureFailure, "non-finite quadrature result");
    const bool meshes_agree = std::isfinite(std::abs(val)) && std::abs(total - val) <= 1e3 * rel_tol * l1_sum;
    if (!converged(err_sum, l1_sum) && !meshes_agree)
        throw Error(ErrorKind::QuadratureFailure, "quadrature did not converge");
    return total;
}

// Integral over [a, b] of h(Q) / sqrt((Q - a)(b - Q)) via Q = m - r cos(theta).
// h receives Q, Q - a and b - Q computed without cancellation.
template <class H>
auto integrate_arc(H&& h, double a, double b, double rel_tol) {
    const double m = 0.5 * (a + b), r = 0.5 * (b - a);
    auto f = [&](double th) {
        const double c = std::cos(th);
        const double s2 = std::sin(0.5 * th);
        const double c2 = std::cos(0.5 * th);
        const double da = 2.0 * r * s2 * s2;  // Q - a = r (1 - cos)
        const double db = 2.0 * r * c2 * c2;  // b - Q = r (1 + cos)
        return h(m - r * c, da, db);
    };
    return integrate(f, 0.0, std::numbers::pi, rel_tol);
}

// Integral over [a, inf) of h(Q) / sqrt(Q - a): Q = a + t^2, t = u / (1 - u).
// h receives Q and t^2 = Q - a. Requires h = O(Q^{-3/2}) or faster.
template <class H>
auto integrate_right_tail(H&& h, double a, double rel_tol) {
    auto f = [&](double u) {
        const double t = u / (1.0 - u);
        const double d = t * t;
        return 2.0 * h(a + d, d) / ((1.0 - u) * (1.0 - u));
    };
    return integrate(f, 0.0, 1.0, rel_tol);
}

// Integral over (-inf, a] of h(Q) / sqrt(a - Q); h receives Q and a - Q.
template <class H>
auto integrate_left_tail(H&& h, double a, double rel_tol) {
    auto f = [&](double u) {
        const double t = u / (1.0 - u);
        const double d = t * t;
        return 2.0 * h(a - d, d) / ((1.0 - u) * (1.0 - u));
    };
    return integrate(f, 0.0, 1.0, rel_tol);
}

// Integral over [a, inf) of a regular integrand decaying like Q^{-2}.
template <class H>
auto integrate_ray(H&& h, double a, int direction, double rel_tol) {
    auto f = [&](double u) {
        const double t = u / (1.0 - u);
        return h(a + direction * t) / ((1.0 - u) * (1.0 - u));
    };
    return integrate(f, 0.0, 1.0, rel_tol);
}

// Root of a continuous f on a sign-changing bracket [a, b].
double bracket_root(const std::function<double(double)>& f, double a, double b,
                    double abs_tol = 0.0);

}  // namespace flipline::num
