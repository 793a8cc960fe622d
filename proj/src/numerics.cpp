#include "flipline/numerics.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>
#include <boost/math/tools/roots.hpp>

namespace flipline::num {

cplx poly_eval(const std::vector<double>& c, cplx x) {
    cplx v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
    return v;
}

static cplx poly_deriv(const std::vector<double>& c, cplx x) {
    cplx v = 0.0;
    for (std::size_t k = c.size() - 1; k >= 1; --k) v = v * x + double(k) * c[k];
    return v;
}

std::vector<cplx> poly_roots(const std::vector<double>& coeffs) {
    const int n = int(coeffs.size()) - 1;
    if (n < 1 || coeffs.back() == 0.0)
        throw Error(ErrorKind::DomainError, "polynomial has no leading coefficient");
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -coeffs[i] / coeffs.back();
    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    std::vector<cplx> roots;
    for (int i = 0; i < n; ++i) {
        cplx x = es.eigenvalues()[i];
        for (int it = 0; it < 3; ++it) {
            cplx d = poly_deriv(coeffs, x);
            if (std::abs(d) == 0.0) break;
            cplx step = poly_eval(coeffs, x) / d;
            if (!std::isfinite(std::abs(step)) || std::abs(step) > 1e-3 * (1.0 + std::abs(x))) break;
            x -= step;
        }
        roots.push_back(x);
    }
    return roots;
}

double bracket_root(const std::function<double(double)>& f, double a, double b, double abs_tol) {
    double fa = f(a), fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if ((fa > 0) == (fb > 0)) throw Error(ErrorKind::DomainError, "root not bracketed");
    std::uintmax_t iters = 200;
    auto tol = [abs_tol](double x, double y) {
        return std::abs(x - y) <= std::max(abs_tol, 4e-16 * std::max(std::abs(x), std::abs(y)));
    };
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
    return 0.5 * (r.first + r.second);
}

}  // namespace flipline::num
